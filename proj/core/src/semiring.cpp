#include "semicirc/semiring.hpp"

#include <algorithm>
#include <set>

namespace semicirc {

bool SemiringHandle::eq(const Value& a, const Value& b) const {
    if (a.is_free() != b.is_free()) return false;
    if (a.is_free()) return free_equal(a.fe(), b.fe());
    return a.num() == b.num();
}

Value SemiringHandle::times_int(long long m, const Value& s) const {
    if (m < 0) {
        if (!neg_fn) fail("NotARing", "negative scalar in non-ring " + name);
        return neg(times_int(-m, s));
    }
    Value acc = zero;
    Value base = s;
    while (m) { // double-and-add keeps this cheap for the falling factorials
        if (m & 1) acc = add(acc, base);
        m >>= 1;
        if (m) base = add(base, base);
    }
    return acc;
}

Value SemiringHandle::from_num(const Num& c) const {
    if (kind == Kind::Free) {
        if (!c.is_int() || c.n < 0)
            fail("ConstantNotInSemiring", num_str(c) + " not in " + name);
        return Value(free_repeat_one((unsigned long long)c.n));
    }
    if (name == "bool") {
        if (c.is_int() && (c.n == 0 || c.n == 1)) return Value(c);
        fail("ConstantNotInSemiring", num_str(c) + " not a boolean");
    }
    if (name == "nat") {
        if (!c.is_int() || c.n < 0) fail("ConstantNotInSemiring", num_str(c) + " not in nat");
        return Value(c);
    }
    if (name == "int") {
        if (!c.is_int()) fail("ConstantNotInSemiring", num_str(c) + " not in int");
        return Value(c);
    }
    if (name.rfind("zmod:", 0) == 0) {
        if (!c.is_int()) fail("ConstantNotInSemiring", num_str(c) + " not integral");
        long long k = std::stoll(name.substr(5));
        long long r = c.n % k;
        if (r < 0) r += k;
        return Value(Num::of(r));
    }
    // minplus/maxplus/rat accept any rational (and the appropriate infinity).
    return Value(c);
}

Value SemiringHandle::parse(const std::string& text) const {
    if (kind != Kind::Free) return from_num(num_parse(text));
    // free values: '+'-separated products of identifiers, or an integer count of 1s
    if (text == "0") return Value(free_zero());
    if (!text.empty() && (isdigit((unsigned char)text[0])))
        return from_num(num_parse(text));
    std::vector<FreeElem> terms;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t plus = text.find('+', pos);
        std::string term = text.substr(pos, plus == std::string::npos ? std::string::npos : plus - pos);
        Monomial m;
        size_t tp = 0;
        while (tp < term.size()) {
            size_t star = term.find('*', tp);
            std::string ident = term.substr(tp, star == std::string::npos ? std::string::npos : star - tp);
            if (ident.empty()) fail("SyntaxError", "bad free value: " + text);
            m.push_back(IdentPool::instance().intern(ident));
            if (star == std::string::npos) break;
            tp = star + 1;
        }
        std::sort(m.begin(), m.end());
        terms.push_back(free_leaf(std::move(m)));
        if (plus == std::string::npos) break;
        pos = plus + 1;
    }
    return Value(free_cat(std::move(terms)));
}

bool free_to_bool(const Value& v) { return v.fe()->len > 0; }

// --- registration ----------------------------------------------------------

namespace {

Value vnum(long long x) { return Value(Num::of(x)); }

// Orders of the cyclic subgroups generated by each element under +, found by
// iterating n*s until the lasso repeats.
std::vector<long long> compute_cyclic_orders(const SemiringHandle& s) {
    std::set<long long> orders;
    for (const auto& g : s.universe) {
        std::vector<Value> seen;
        Value cur = g;
        for (;;) {
            long long hit = -1;
            for (size_t i = 0; i < seen.size(); i++)
                if (s.eq(seen[i], cur)) { hit = (long long)i; break; }
            if (hit >= 0) {
                orders.insert((long long)seen.size() - hit);
                break;
            }
            seen.push_back(cur);
            cur = s.add(cur, g);
        }
    }
    orders.insert(1);
    return std::vector<long long>(orders.begin(), orders.end());
}

} // namespace

void check_semiring_axioms(const SemiringHandle& s) {
    std::mt19937 rng(0xC0FFEE);
    auto bail = [&](const char* axiom, const Value& a, const Value& b, const Value& c) {
        fail("SemiringError", std::string("axiom ") + axiom + " violated in " + s.name +
                                  " at a=" + s.str(a) + " b=" + s.str(b) + " c=" + s.str(c));
    };
    for (int t = 0; t < 200; t++) {
        Value a = s.sample(rng), b = s.sample(rng), c = s.sample(rng);
        if (!s.eq(s.add(a, b), s.add(b, a))) bail("add-comm", a, b, c);
        if (!s.eq(s.mul(a, b), s.mul(b, a))) bail("mul-comm", a, b, c);
        if (!s.eq(s.add(s.add(a, b), c), s.add(a, s.add(b, c)))) bail("add-assoc", a, b, c);
        if (!s.eq(s.mul(s.mul(a, b), c), s.mul(a, s.mul(b, c)))) bail("mul-assoc", a, b, c);
        if (!s.eq(s.mul(a, s.add(b, c)), s.add(s.mul(a, b), s.mul(a, c)))) bail("distrib", a, b, c);
        if (!s.eq(s.add(a, s.zero), a)) bail("add-zero", a, b, c);
        if (!s.eq(s.mul(a, s.one), a)) bail("mul-one", a, b, c);
        if (!s.eq(s.mul(a, s.zero), s.zero)) bail("annihilate", a, b, c);
        if (s.kind == SemiringHandle::Kind::Ring && !s.eq(s.add(a, s.neg(a)), s.zero))
            bail("add-inverse", a, b, c);
    }
}

Semiring make_semiring(const std::string& token) {
    auto h = std::make_shared<SemiringHandle>();
    h->name = token;
    using K = SemiringHandle::Kind;

    auto num2 = [](Num (*f)(const Num&, const Num&)) {
        return [f](const Value& a, const Value& b) { return Value(f(a.num(), b.num())); };
    };

    if (token == "bool") {
        h->kind = K::Finite;
        h->zero = vnum(0);
        h->one = vnum(1);
        h->add_fn = [](const Value& a, const Value& b) { return vnum(a.num().n | b.num().n); };
        h->mul_fn = [](const Value& a, const Value& b) { return vnum(a.num().n & b.num().n); };
        h->universe = {vnum(0), vnum(1)};
        h->sample = [](std::mt19937& r) { return vnum((long long)(r() & 1)); };
    } else if (token == "nat") {
        h->zero = vnum(0);
        h->one = vnum(1);
        h->add_fn = num2(num_add);
        h->mul_fn = num2(num_mul);
        h->sample = [](std::mt19937& r) { return vnum((long long)(r() % 50)); };
    } else if (token == "int") {
        h->kind = K::Ring;
        h->zero = vnum(0);
        h->one = vnum(1);
        h->add_fn = num2(num_add);
        h->mul_fn = num2(num_mul);
        h->neg_fn = [](const Value& a) { return Value(num_sub(Num::of(0), a.num())); };
        h->sample = [](std::mt19937& r) { return vnum((long long)(r() % 101) - 50); };
    } else if (token == "rat") {
        h->kind = K::Ring;
        h->zero = vnum(0);
        h->one = vnum(1);
        h->add_fn = num2(num_add);
        h->mul_fn = num2(num_mul);
        h->neg_fn = [](const Value& a) { return Value(num_sub(Num::of(0), a.num())); };
        h->sample = [](std::mt19937& r) {
            return Value(Num::rat((long long)(r() % 41) - 20, 1 + (long long)(r() % 7)));
        };
    } else if (token == "minplus") {
        h->zero = Value(Num::pinf());
        h->one = vnum(0);
        h->add_fn = [](const Value& a, const Value& b) {
            return num_cmp(a.num(), b.num()) <= 0 ? a : b;
        };
        h->mul_fn = num2(num_add);
        h->sample = [](std::mt19937& r) {
            return r() % 8 == 0 ? Value(Num::pinf()) : vnum((long long)(r() % 100));
        };
    } else if (token == "maxplus") {
        h->zero = Value(Num::ninf());
        h->one = vnum(0);
        h->add_fn = [](const Value& a, const Value& b) {
            return num_cmp(a.num(), b.num()) >= 0 ? a : b;
        };
        h->mul_fn = num2(num_add);
        h->sample = [](std::mt19937& r) {
            return r() % 8 == 0 ? Value(Num::ninf())
                                : Value(Num::rat((long long)(r() % 100) - 50, 1 + (long long)(r() % 3)));
        };
    } else if (token.rfind("zmod:", 0) == 0) {
        long long k = 0;
        try { k = std::stoll(token.substr(5)); } catch (...) {}
        if (k < 2) fail("SemiringError", "zmod modulus must be >= 2");
        h->kind = K::Finite;
        h->zero = vnum(0);
        h->one = vnum(1 % k);
        h->add_fn = [k](const Value& a, const Value& b) { return vnum((a.num().n + b.num().n) % k); };
        h->mul_fn = [k](const Value& a, const Value& b) { return vnum((a.num().n * b.num().n) % k); };
        h->neg_fn = [k](const Value& a) { return vnum((k - a.num().n) % k); };
        for (long long i = 0; i < k; i++) h->universe.push_back(vnum(i));
        h->sample = [k](std::mt19937& r) { return vnum((long long)(r() % (unsigned long long)k)); };
        // zmod is also a ring; report Finite (drives the finite lowering) but keep neg.
    } else if (token == "free") {
        h->kind = K::Free;
        h->zero = Value(free_zero());
        h->one = Value(free_one());
        h->add_fn = [](const Value& a, const Value& b) { return Value(free_add(a.fe(), b.fe())); };
        h->mul_fn = [](const Value& a, const Value& b) { return Value(free_mul(a.fe(), b.fe())); };
        h->sample = [](std::mt19937& r) {
            static const char* ids[] = {"e_a", "e_b", "e_c", "e_d"};
            int nterms = (int)(r() % 3);
            std::vector<FreeElem> ts;
            for (int i = 0; i < nterms; i++) {
                Monomial m;
                int deg = (int)(r() % 3);
                for (int j = 0; j < deg; j++)
                    m.push_back(IdentPool::instance().intern(ids[r() % 4]));
                std::sort(m.begin(), m.end());
                ts.push_back(free_leaf(std::move(m)));
            }
            return Value(free_cat(std::move(ts)));
        };
    } else {
        fail("SemiringError", "unknown semiring token: " + token);
    }

    if (h->kind == K::Finite) h->cyclic_orders = compute_cyclic_orders(*h);
    check_semiring_axioms(*h);
    return h;
}

} // namespace semicirc

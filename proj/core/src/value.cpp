#include "semicirc/value.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace semicirc {

static long long checked(__int128 v, const char* what) {
    if (v > (__int128)INT64_MAX || v < (__int128)INT64_MIN)
        fail("Overflow", std::string("64-bit overflow in ") + what);
    return (long long)v;
}

Num Num::rat(long long num, long long den) {
    if (den == 0) fail("TypeMismatch", "zero denominator");
    if (den < 0) { num = -num; den = -den; }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
    return Num{K::Fin, num, den};
}

static Num make_rat(__int128 n, __int128 d, const char* what) {
    if (d < 0) { n = -n; d = -d; }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b) { __int128 t = a % b; a = b; b = t; }
    if (a > 1) { n /= a; d /= a; }
    return Num{Num::K::Fin, checked(n, what), checked(d, what)};
}

Num num_add(const Num& a, const Num& b) {
    if (!a.finite() || !b.finite()) {
        if (a.finite()) return b;
        if (b.finite()) return a;
        if (a.k != b.k) fail("TypeMismatch", "inf + -inf");
        return a;
    }
    return make_rat((__int128)a.n * b.d + (__int128)b.n * a.d, (__int128)a.d * b.d, "add");
}

Num num_sub(const Num& a, const Num& b) {
    Num nb = b;
    if (nb.k == Num::K::PInf) nb.k = Num::K::NInf;
    else if (nb.k == Num::K::NInf) nb.k = Num::K::PInf;
    else nb.n = -nb.n;
    return num_add(a, nb);
}

Num num_mul(const Num& a, const Num& b) {
    if (!a.finite() || !b.finite()) {
        int sa = a.finite() ? (a.n > 0) - (a.n < 0) : (a.k == Num::K::PInf ? 1 : -1);
        int sb = b.finite() ? (b.n > 0) - (b.n < 0) : (b.k == Num::K::PInf ? 1 : -1);
        if (sa == 0 || sb == 0) fail("TypeMismatch", "0 * inf");
        return sa * sb > 0 ? Num::pinf() : Num::ninf();
    }
    return make_rat((__int128)a.n * b.n, (__int128)a.d * b.d, "mul");
}

Num num_div(const Num& a, const Num& b) {
    if (!a.finite() || !b.finite() || b.n == 0) fail("TypeMismatch", "bad division");
    return make_rat((__int128)a.n * b.d, (__int128)a.d * b.n, "div");
}

int num_cmp(const Num& a, const Num& b) {
    if (a.k == b.k && a.k != Num::K::Fin) return 0;
    if (a.k == Num::K::NInf || b.k == Num::K::PInf) return -1;
    if (a.k == Num::K::PInf || b.k == Num::K::NInf) return 1;
    __int128 l = (__int128)a.n * b.d, r = (__int128)b.n * a.d;
    return l < r ? -1 : (l > r ? 1 : 0);
}

std::string num_str(const Num& a) {
    if (a.k == Num::K::PInf) return "inf";
    if (a.k == Num::K::NInf) return "-inf";
    if (a.d == 1) return std::to_string(a.n);
    return std::to_string(a.n) + "/" + std::to_string(a.d);
}

Num num_parse(const std::string& s) {
    if (s == "inf" || s == "+inf") return Num::pinf();
    if (s == "-inf") return Num::ninf();
    size_t slash = s.find('/');
    try {
        if (slash == std::string::npos) return Num::of(std::stoll(s));
        return Num::rat(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    } catch (const std::exception&) {
        fail("SyntaxError", "bad number: " + s);
    }
}

// --- identifiers -----------------------------------------------------------

IdentPool& IdentPool::instance() {
    static IdentPool p;
    return p;
}

uint32_t IdentPool::intern(const std::string& name) {
    static std::unordered_map<std::string, uint32_t> map;
    auto it = map.find(name);
    if (it != map.end()) return it->second;
    uint32_t id = (uint32_t)names_.size();
    names_.push_back(name);
    map.emplace(name, id);
    return id;
}

Monomial mono_union(const Monomial& a, const Monomial& b) {
    Monomial out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::string mono_str(const Monomial& m) {
    if (m.empty()) return "1";
    std::string s;
    for (size_t i = 0; i < m.size(); i++) {
        if (i) s += "*";
        s += IdentPool::instance().name(m[i]);
    }
    return s;
}

// --- free elements ---------------------------------------------------------

FreeElem free_zero() {
    static FreeElem z = [] {
        auto n = std::make_shared<FreeNode>();
        n->k = FreeNode::K::Cat;
        n->len = 0;
        return n;
    }();
    return z;
}

FreeElem free_leaf(Monomial m) {
    auto n = std::make_shared<FreeNode>();
    n->k = FreeNode::K::Leaf;
    n->mono = std::move(m);
    n->len = 1;
    return n;
}

FreeElem free_one() { return free_leaf({}); }

FreeElem free_ident(const std::string& name) {
    return free_leaf({IdentPool::instance().intern(name)});
}

FreeElem free_cat(std::vector<FreeElem> parts) {
    std::vector<FreeElem> keep;
    unsigned long long len = 0;
    for (auto& p : parts)
        if (p->len) { len += p->len; keep.push_back(std::move(p)); }
    if (keep.empty()) return free_zero();
    if (keep.size() == 1) return keep[0];
    auto n = std::make_shared<FreeNode>();
    n->k = FreeNode::K::Cat;
    n->parts = std::move(keep);
    n->len = len;
    return n;
}

FreeElem free_add(const FreeElem& a, const FreeElem& b) { return free_cat({a, b}); }

FreeElem free_mul(const FreeElem& a, const FreeElem& b) {
    if (a->len == 0 || b->len == 0) return free_zero();
    if (a->len == 1 && a->k == FreeNode::K::Leaf && a->mono.empty()) return b;
    if (b->len == 1 && b->k == FreeNode::K::Leaf && b->mono.empty()) return a;
    auto n = std::make_shared<FreeNode>();
    n->k = FreeNode::K::Prod;
    n->a = a;
    n->b = b;
    n->len = a->len * b->len;
    return n;
}

FreeElem free_repeat_one(unsigned long long m) {
    std::vector<FreeElem> parts;
    for (unsigned long long i = 0; i < m; i++) parts.push_back(free_one());
    return free_cat(std::move(parts));
}

static void mat_rec(const FreeElem& e, std::vector<Monomial>& out, size_t cap) {
    if (out.size() + e->len > cap) fail("BudgetExceeded", "free element too large to materialize");
    switch (e->k) {
        case FreeNode::K::Leaf: out.push_back(e->mono); break;
        case FreeNode::K::Cat:
            for (const auto& p : e->parts) mat_rec(p, out, cap);
            break;
        case FreeNode::K::Prod: {
            std::vector<Monomial> la, lb;
            mat_rec(e->a, la, cap);
            mat_rec(e->b, lb, cap);
            for (const auto& x : la)
                for (const auto& y : lb) {
                    if (out.size() >= cap) fail("BudgetExceeded", "free element too large");
                    out.push_back(mono_union(x, y));
                }
            break;
        }
    }
}

std::vector<Monomial> free_materialize(const FreeElem& e, size_t cap) {
    std::vector<Monomial> out;
    out.reserve((size_t)std::min<unsigned long long>(e->len, cap));
    mat_rec(e, out, cap);
    return out;
}

std::vector<Monomial> free_canonical(const FreeElem& e, size_t cap) {
    auto out = free_materialize(e, cap);
    std::sort(out.begin(), out.end());
    return out;
}

bool free_equal(const FreeElem& a, const FreeElem& b) {
    if (a->len != b->len) return false;
    return free_canonical(a) == free_canonical(b);
}

std::string free_str(const FreeElem& e, size_t limit) {
    auto ms = free_canonical(e, 1u << 20);
    if (ms.empty()) return "0";
    std::string s;
    size_t shown = std::min(ms.size(), limit);
    for (size_t i = 0; i < shown; i++) {
        if (i) s += " + ";
        s += mono_str(ms[i]);
    }
    if (shown < ms.size()) s += " + ... (" + std::to_string(ms.size()) + " monomials)";
    return s;
}

std::string value_str(const Value& v) {
    return v.is_free() ? free_str(v.fe()) : num_str(v.num());
}

} // namespace semicirc

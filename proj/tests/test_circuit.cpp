#include <doctest.h>

#include <random>

#include "semicirc/circuit.hpp"

using namespace semicirc;

namespace {

std::function<Value(const InputKey&)> matrix_valuation(const std::vector<std::vector<Value>>& m) {
    return [&m](const InputKey& k) { return m[k.tuple[0]][k.tuple[1]]; };
}

std::vector<std::vector<Value>> random_matrix(int rows, int cols, const Semiring& s,
                                              std::mt19937& rng) {
    std::vector<std::vector<Value>> m(rows, std::vector<Value>(cols, s->zero));
    for (auto& r : m)
        for (auto& v : r) v = s->sample(rng);
    return m;
}

std::vector<std::vector<Value>> num_matrix(std::initializer_list<std::initializer_list<long long>> rs) {
    std::vector<std::vector<Value>> m;
    for (auto& r : rs) {
        m.push_back({});
        for (long long x : r) m.back().push_back(Value(Num::of(x)));
    }
    return m;
}

} // namespace

TEST_CASE("builder simplifications") {
    Circuit c;
    uint32_t z = c.const_zero(), o = c.const_one();
    uint32_t x = c.input({"w", {0}});
    CHECK(c.mul(x, o) == x);
    CHECK(c.mul(o, x) == x);
    CHECK(c.is_const_zero(c.mul(x, z)));
    CHECK(c.add({x, z}) == x);       // single live term passes through
    CHECK(c.is_const_zero(c.add({z, z})));
    uint32_t a = c.add({x, x});
    CHECK(c.gates[a].k == Gate::K::Add);
    // 1-row permanents become Add gates, 0-row ones collapse to const one
    uint32_t p1 = c.perm(1, 2, {x, x});
    CHECK(c.gates[p1].k == Gate::K::Add);
    CHECK(c.is_const_one(c.perm(0, 3, {})));
    CHECK(c.is_const_zero(c.perm(3, 2, {x, x, x, x, x, x})));
    CHECK_THROWS_WITH_AS(c.perm(2, 2, {x}), doctest::Contains("CircuitShape"), Error);
}

TEST_CASE("frozen permanent values") {
    auto nat = make_semiring("nat");
    CHECK(num_cmp(perm_reference(num_matrix({{1, 2}, {3, 4}}), nat).num(), Num::of(10)) == 0);
    CHECK(num_cmp(perm_reference(num_matrix({{1, 2, 3, 4}, {5, 6, 7, 8}}), nat).num(),
                  Num::of(190)) == 0);
    auto mp = make_semiring("minplus");
    CHECK(num_cmp(perm_reference(num_matrix({{1, 2, 3}, {4, 5, 6}}), mp).num(), Num::of(6)) == 0);
    auto z6 = make_semiring("zmod:6");
    CHECK(num_cmp(perm_reference(num_matrix({{1, 1, 1}, {1, 1, 1}}), z6).num(), Num::of(0)) == 0);
    // 0-row matrix: the empty injection contributes one
    CHECK(nat->eq(perm_reference({}, nat), nat->one));

    auto big = num_matrix({{1}, {1}, {1}, {1}, {1}, {1}, {1}, {1}, {1}});
    CHECK_THROWS_WITH_AS(perm_reference(big, nat), doctest::Contains("ScaleExceeded"), Error);
}

TEST_CASE("perm gate evaluation matches reference") {
    std::mt19937 rng(11);
    for (const char* tok : {"nat", "int", "zmod:6", "bool", "minplus", "free"}) {
        auto s = make_semiring(tok);
        for (int t = 0; t < 12; t++) {
            int k = 1 + (int)(rng() % 4);
            int n = k + (int)(rng() % (9 - k));
            auto m = random_matrix(k, n, s, rng);
            Circuit c = perm_gate_circuit(k, n);
            c.evaluate(matrix_valuation(m), s);
            CHECK(s->eq(c.out_value(), perm_reference(m, s)));
        }
    }
}

TEST_CASE("lowering strategies agree with reference") {
    std::mt19937 rng(17);
    struct Case {
        const char* tok;
        std::vector<LowerStrategy> strats;
        int kmax;
    };
    std::vector<Case> cases = {
        {"nat", {LowerStrategy::Generic}, 4},
        {"minplus", {LowerStrategy::Generic}, 4},
        {"free", {LowerStrategy::Generic}, 3},
        {"int", {LowerStrategy::Generic, LowerStrategy::Ring}, 4},
        {"rat", {LowerStrategy::Generic, LowerStrategy::Ring}, 4},
        {"bool", {LowerStrategy::Generic, LowerStrategy::Finite}, 4},
        {"zmod:6", {LowerStrategy::Generic, LowerStrategy::Ring, LowerStrategy::Finite}, 3},
    };
    for (const auto& cs : cases) {
        auto s = make_semiring(cs.tok);
        for (int t = 0; t < 6; t++) {
            int k = 1 + (int)(rng() % cs.kmax);
            int n = k + (int)(rng() % (9 - k));
            auto m = random_matrix(k, n, s, rng);
            Value ref = perm_reference(m, s);
            Circuit base = perm_gate_circuit(k, n);
            for (auto strat : cs.strats) {
                Circuit low = lower_circuit(base, strat, s);
                for (const auto& g : low.gates) CHECK(g.k != Gate::K::Perm);
                low.evaluate(matrix_valuation(m), s);
                CHECK(s->eq(low.out_value(), ref));
            }
        }
    }
    // finite strategy at k = 4 over zmod:6 (large class space, run once)
    auto z6 = make_semiring("zmod:6");
    auto m = random_matrix(4, 6, z6, rng);
    Circuit low = lower_circuit(perm_gate_circuit(4, 6), LowerStrategy::Finite, z6);
    low.evaluate(matrix_valuation(m), z6);
    CHECK(z6->eq(low.out_value(), perm_reference(m, z6)));
}

TEST_CASE("counting and test gates") {
    auto b = make_semiring("bool");
    Circuit c;
    std::vector<uint32_t> xs;
    for (int i = 0; i < 5; i++) xs.push_back(c.input({"x", {i}}));
    uint32_t t2 = c.thr(xs, 2, LLONG_MAX);
    uint32_t e3 = c.thr(xs, 3, 3);
    uint32_t m2 = c.modg(xs, 2, 1);
    uint32_t tst = c.test(xs[0], Num::of(1));
    c.output = c.add({t2, e3, m2, tst});
    auto val = [](const InputKey& k) { return Value(Num::of(k.tuple[0] < 3 ? 1 : 0)); };
    c.evaluate(val, b);
    CHECK(b->eq(c.value(t2), b->one));  // 3 ones >= 2
    CHECK(b->eq(c.value(e3), b->one));  // exactly 3
    CHECK(b->eq(c.value(m2), b->one));  // 3 odd
    CHECK(b->eq(c.value(tst), b->one));
    c.update_input({"x", {2}}, Value(Num::of(0)));
    CHECK(b->eq(c.value(t2), b->one));
    CHECK(b->eq(c.value(e3), b->zero));
    CHECK(b->eq(c.value(m2), b->zero));
    CHECK(c.check_cache_consistency());
}

TEST_CASE("update propagation is correct across strategies") {
    std::mt19937 rng(29);
    struct Case {
        const char* tok;
        LowerStrategy strat;
        int k;
    };
    for (auto cs : std::initializer_list<Case>{{"nat", LowerStrategy::Generic, 3},
                                               {"int", LowerStrategy::Ring, 3},
                                               {"bool", LowerStrategy::Finite, 3},
                                               {"zmod:6", LowerStrategy::Finite, 2},
                                               {"minplus", LowerStrategy::Generic, 2}}) {
        auto s = make_semiring(cs.tok);
        int n = 7;
        auto m = random_matrix(cs.k, n, s, rng);
        Circuit c = lower_circuit(perm_gate_circuit(cs.k, n), cs.strat, s);
        c.evaluate(matrix_valuation(m), s);
        for (int t = 0; t < 40; t++) {
            int r = (int)(rng() % cs.k), col = (int)(rng() % n);
            m[r][col] = s->sample(rng);
            Value got = c.update_input({"m", {r, col}}, m[r][col]);
            CHECK(s->eq(got, perm_reference(m, s)));
        }
        CHECK(c.check_cache_consistency());
        // full re-evaluation agrees with the incrementally maintained cache
        Value cached = c.out_value();
        c.evaluate(matrix_valuation(m), s);
        CHECK(s->eq(cached, c.out_value()));
    }
}

TEST_CASE("update works on unlowered perm gates") {
    auto s = make_semiring("nat");
    std::mt19937 rng(3);
    auto m = random_matrix(3, 5, s, rng);
    Circuit c = perm_gate_circuit(3, 5);
    c.evaluate(matrix_valuation(m), s);
    m[1][2] = Value(Num::of(100));
    Value got = c.update_input({"m", {1, 2}}, m[1][2]);
    CHECK(s->eq(got, perm_reference(m, s)));
    CHECK(c.last_update_visits() == 1); // the perm gate itself
}

TEST_CASE("update visit counts scale by strategy") {
    auto nat = make_semiring("nat");
    auto z2 = make_semiring("zmod:2");
    std::mt19937 rng(31);
    auto worst_visits = [&](Circuit& c, std::vector<std::vector<Value>>& m, const Semiring& s) {
        long long worst = 0;
        for (int t = 0; t < 30; t++) {
            int r = (int)(rng() % m.size()), col = (int)(rng() % m[0].size());
            m[r][col] = s->sample(rng);
            c.update_input({"m", {(int)r, (int)col}}, m[r][col]);
            worst = std::max(worst, c.last_update_visits());
        }
        return worst;
    };
    // generic: O(log n) gates touched per update
    std::vector<long long> gen;
    for (int n : {16, 64, 256}) {
        auto m = random_matrix(2, n, nat, rng);
        Circuit c = lower_circuit(perm_gate_circuit(2, n), LowerStrategy::Generic, nat);
        c.evaluate(matrix_valuation(m), nat);
        gen.push_back(worst_visits(c, m, nat));
    }
    for (size_t i = 0; i < gen.size(); i++) {
        double logn = std::log2(16 << (4 * i));
        CHECK(gen[i] <= 14 * (long long)logn);
    }
    // ring / finite: O(1) gates touched per update, flat in n
    std::vector<long long> rv, fv;
    for (int n : {16, 128}) {
        auto ir = make_semiring("int");
        auto mi = random_matrix(2, n, ir, rng);
        Circuit cr = lower_circuit(perm_gate_circuit(2, n), LowerStrategy::Ring, ir);
        cr.evaluate(matrix_valuation(mi), ir);
        rv.push_back(worst_visits(cr, mi, ir));
        auto mf = random_matrix(2, n, z2, rng);
        Circuit cf = lower_circuit(perm_gate_circuit(2, n), LowerStrategy::Finite, z2);
        cf.evaluate(matrix_valuation(mf), z2);
        fv.push_back(worst_visits(cf, mf, z2));
    }
    CHECK(rv[1] <= rv[0] + 2);
    CHECK(fv[1] <= fv[0] + 2);
}

TEST_CASE("stats and dump") {
    Circuit c;
    uint32_t x = c.input({"w", {0, 1}});
    uint32_t y = c.input({"w", {1, 2}});
    uint32_t m = c.mul(x, y);
    c.output = c.add({m, c.const_one()});
    auto st = c.stats();
    CHECK(st.size == 5);
    CHECK(st.depth == 2);
    CHECK(st.max_fanout == 1);
    CHECK(st.max_reachout == 3); // input -> mul -> add
    std::string d = c.dump();
    CHECK(d.find("g0 = input w(0,1)") != std::string::npos);
    CHECK(d.find("g2 = mul g0 g1") != std::string::npos);
    CHECK(d.find("const one") != std::string::npos);
    CHECK(d.find("output=g4") != std::string::npos);

    auto labels = [](int id) { return std::string(1, (char)('a' + id)); };
    CHECK(c.dump(labels).find("input w(a,b)") != std::string::npos);

    Circuit p = perm_gate_circuit(2, 3);
    CHECK(p.dump().find("perm 2x3 [g0 g1 g2;g3 g4 g5]") != std::string::npos);
    CHECK(p.stats().max_perm_rows == 2);
}

TEST_CASE("error paths") {
    Circuit c;
    uint32_t x = c.input({"w", {0}});
    c.output = x;
    CHECK_THROWS_WITH_AS(c.update_input({"w", {0}}, Value(Num::of(1))),
                         doctest::Contains("CircuitEval"), Error);
    auto s = make_semiring("nat");
    c.evaluate([&](const InputKey&) { return s->one; }, s);
    CHECK_THROWS_WITH_AS(c.update_input({"v", {0}}, Value(Num::of(1))),
                         doctest::Contains("UnknownInput"), Error);
    CHECK_THROWS_WITH_AS(lower_circuit(perm_gate_circuit(7, 8), LowerStrategy::Generic, s),
                         doctest::Contains("ScaleExceeded"), Error);
}

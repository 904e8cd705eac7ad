#include <doctest.h>

#include <algorithm>

#include "semicirc/nested.hpp"
#include "test_util.hpp"

using namespace semicirc;

namespace {

Signature graph_sig() {
    Signature sig;
    sig.add_relation("V", 1);
    sig.add_relation("E", 2);
    sig.add_weight("w", 1);
    return sig;
}

// directed sparse graph, V = all vertices, small natural weights
WeightedStructure weighted_graph(int n, unsigned seed) {
    std::mt19937 rng(seed);
    WeightedStructure s;
    s.sig = graph_sig();
    s.semiring = make_semiring("rat");
    for (int i = 0; i < n; i++) s.add_element("a" + std::to_string(i));
    for (int i = 0; i < n; i++) s.add_tuple("V", {i});
    for (int v = 1; v < n; v++)
        for (int picks = (int)(rng() % 3); picks > 0; picks--) {
            int u = (int)(rng() % v);
            Tuple t = rng() % 2 ? Tuple{v, u} : Tuple{u, v};
            if (!s.has_tuple("E", t)) s.add_tuple("E", t);
        }
    for (int i = 0; i < n; i++) s.set_weight("w", {i}, Value(Num::of((long long)(rng() % 7))));
    return s;
}

const char* kAvgQuery =
    "max x. guard [V(x)] div( sum y. [E(x,y)]@nat * w(y), sum y. [E(x,y)]@nat )";

} // namespace

TEST_CASE("parse_nested builds typed trees and enforces the guard rule") {
    auto sig = graph_sig();
    auto conns = ConnectiveRegistry::builtins().sigs();

    // connective-free text collapses to a single leaf in the default semiring
    Nested plain = parse_nested("sum x. w(x)", sig, conns, "nat");
    CHECK(plain->k == NestedNode::K::Leaf);
    CHECK(plain->semiring == "nat");

    Nested avg = parse_nested(kAvgQuery, sig, conns, "nat");
    CHECK(avg->k == NestedNode::K::Sum);
    CHECK(avg->semiring == "maxplus");
    REQUIRE(avg->kids.size() == 1);
    CHECK(avg->kids[0]->k == NestedNode::K::Conn);
    CHECK(avg->kids[0]->conn == "div");
    CHECK(avg->kids[0]->semiring == "rat");
    CHECK(avg->kids[0]->guard_rel == "V");
    CHECK(nested_free_vars(avg).empty());

    CHECK_THROWS_WITH_AS(parse_nested("sum x,y. div(w(x), w(y))", sig, conns, "nat"),
                         doctest::Contains("UnguardedConnective"), Error);
    CHECK_THROWS_WITH_AS(parse_nested("sum x,y. guard [V(x)] div(w(x), w(y))", sig, conns, "nat"),
                         doctest::Contains("UnguardedConnective"), Error);
    CHECK_THROWS_WITH_AS(parse_nested("guard [V(x)] frob(w(x))", sig, conns, "nat"),
                         doctest::Contains("UnregisteredConnective"), Error);
    CHECK_THROWS_WITH_AS(parse_nested("guard [V(x)] div(w(x))", sig, conns, "nat"),
                         doctest::Contains("TypeMismatch"), Error);
    // tropical 0/1 differ numerically from the plain-numeric ones
    CHECK_THROWS_WITH_AS(parse_nested("sum x. [V(x)]@minplus * w(x)", sig, conns, "nat"),
                         doctest::Contains("TypeMismatch"), Error);
}

TEST_CASE("maximum average neighbor weight matches the direct computation") {
    const auto& reg = ConnectiveRegistry::builtins();
    auto mp = make_semiring("maxplus");
    for (unsigned seed = 1; seed <= 5; seed++) {
        auto s = weighted_graph(8, seed);
        Nested f = parse_nested(kAvgQuery, s.sig, reg.sigs(), "nat");
        NestedEvaluation ev(s, f);
        CHECK(ev.semiring() == "maxplus");
        CHECK(ev.vars().empty());

        Num best = Num::ninf();
        for (int x = 0; x < s.n(); x++) {
            long long deg = 0;
            Num tot = Num::of(0);
            for (int y = 0; y < s.n(); y++)
                if (s.has_tuple("E", {x, y})) {
                    deg++;
                    tot = num_add(tot, s.weight("w", {y}).num());
                }
            Num val = deg ? num_div(tot, Num::of(deg)) : Num::of(0);
            if (num_cmp(val, best) > 0) best = val;
        }
        CAPTURE(seed);
        CHECK(mp->eq(ev.value(), Value(best)));
        CHECK(mp->eq(brute_nested(s, f, reg), Value(best)));
    }
}

TEST_CASE("heavier-than-its-neighborhood query: probes and enumeration") {
    const auto& reg = ConnectiveRegistry::builtins();
    auto bl = make_semiring("bool");
    const char* q = "sum y. [E(x,y)] * guard [V(y)] lt( sum z. [E(y,z)] * w(z), w(y) )";
    for (unsigned seed = 1; seed <= 4; seed++) {
        auto s = weighted_graph(7, seed);
        Nested f = parse_nested(q, s.sig, reg.sigs(), "bool");
        NestedEvaluation ev(s, f);
        CHECK(ev.boolean());
        REQUIRE(ev.vars() == std::vector<std::string>{"x"});

        std::vector<Tuple> want;
        for (int x = 0; x < s.n(); x++) {
            bool sat = false;
            for (int y = 0; y < s.n() && !sat; y++) {
                if (!s.has_tuple("E", {x, y})) continue;
                Num around = Num::of(0);
                for (int z = 0; z < s.n(); z++)
                    if (s.has_tuple("E", {y, z}))
                        around = num_add(around, s.weight("w", {z}).num());
                sat = num_cmp(around, s.weight("w", {y}).num()) < 0;
            }
            CAPTURE(seed);
            CAPTURE(x);
            CHECK(bl->eq(ev.probe({x}), bl->iverson(sat)));
            CHECK(bl->eq(brute_nested(s, f, reg, {{"x", x}}), bl->iverson(sat)));
            if (sat) want.push_back({x});
        }
        auto got = ev.answers();
        std::sort(got.begin(), got.end());
        CHECK(got == want);
    }
}

TEST_CASE("compiled nested evaluation equals the reference interpreter") {
    const auto& reg = ConnectiveRegistry::builtins();
    struct Q {
        const char* text;
        const char* sr;
    };
    const Q qs[] = {
        {"sum x. guard [V(x)] iverson(w(x)) * w(x)", "nat"},
        {"sum x,y. [E(x,y)] * guard [E(x,y)] div(w(x), w(y))", "rat"},
        {"min x. guard [V(x)] neg(w(x))", "minplus"},
        {"sum x. [V(x)] * guard [V(x)] leq(w(x), sum y. [E(x,y)] * w(y))", "nat"},
        {"max x. w(x)", "maxplus"},
        {"sum x. guard [V(x)] eq(w(x), 2)", "nat"},
        {"2 * (max x. guard [V(x)] div(w(x), 2)) + 1", "rat"},
    };
    auto sig = graph_sig();
    for (const Q& q : qs) {
        Nested f = parse_nested(q.text, sig, reg.sigs(), q.sr);
        auto res = make_semiring(f->semiring);
        for (unsigned seed = 1; seed <= 3; seed++) {
            auto s = weighted_graph(6, seed);
            NestedEvaluation ev(s, f);
            CAPTURE(std::string(q.text));
            CAPTURE(seed);
            CHECK(res->eq(ev.value(), brute_nested(s, f, reg)));
        }
    }
}

TEST_CASE("empty guards and connective-free delegation") {
    const auto& reg = ConnectiveRegistry::builtins();
    auto nat = make_semiring("nat");
    WeightedStructure s = weighted_graph(5, 9);

    // no V tuples at all: every guarded value is zero
    WeightedStructure bare;
    bare.sig = graph_sig();
    bare.semiring = nat;
    for (int i = 0; i < 4; i++) bare.add_element("a" + std::to_string(i));
    for (int i = 0; i < 4; i++) bare.set_weight("w", {i}, Value(Num::of(i + 1)));
    Nested g = parse_nested("sum x. guard [V(x)] iverson(w(x))", bare.sig, reg.sigs(), "nat");
    NestedEvaluation evg(bare, g);
    CHECK(nat->eq(evg.value(), nat->zero));
    CHECK(nat->eq(brute_nested(bare, g, reg), nat->zero));

    // connective-free nested text is exactly the compiled plain query
    const char* plain = "sum x,y. [E(x,y)] * w(x)";
    Nested f = parse_nested(plain, s.sig, reg.sigs(), "nat");
    REQUIRE(f->k == NestedNode::K::Leaf);
    NestedEvaluation ev(s, f);
    CompiledQuery cq = compile(s, parse_query(plain, s.sig));
    CHECK(nat->eq(ev.value(), cq.eval_on(s, nat)));
}

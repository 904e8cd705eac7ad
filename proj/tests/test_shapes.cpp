#include <doctest.h>

#include "semicirc/oracle.hpp"
#include "semicirc/shapes.hpp"
#include "test_util.hpp"

using namespace semicirc;
using testutil::random_structure;
using testutil::test_sig;

namespace {

// E/U slice of a weighted structure as a purely relational binary structure
BinaryStructure to_binary(const WeightedStructure& s) {
    BinaryStructure b;
    b.n = s.n();
    b.unary.assign(b.n, {});
    for (const auto& t : s.tuples("U")) b.unary[t[0]].push_back(mark_id("U"));
    std::vector<std::pair<int, int>> pairs;
    for (const auto& t : s.tuples("E")) pairs.push_back({t[0], t[1]});
    b.binary.push_back({"E", pairs});
    return b;
}

Expr close_over(Expr e, const std::vector<std::string>& vars) {
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) e = e_sum(*it, e);
    return e;
}

} // namespace

TEST_CASE("decompose_basic shape census") {
    // [x != y] * u(x) * w(y) over depth-1 forests: anchors merged at a common
    // node are killed, leaving seven placements of the two distinct anchors
    Expr e = e_mul({e_bracket(f_not(f_eq(term_var("x"), term_var("y")))),
                    e_weight("u", {term_var("x")}), e_weight("w", {term_var("y")})});
    auto parts = decompose_basic(e, {"x", "y"}, 1);
    CHECK(parts.size() == 7);
    for (const auto& p : parts) {
        CHECK(p.mult == 1);
        CHECK(p.consts.empty());
        const Shape& sh = p.ls.shape;
        CHECK(sh.anchor[0] != sh.anchor[1]);
        std::vector<std::string> lx = p.ls.lambda[sh.anchor[0]];
        std::vector<std::string> ly = p.ls.lambda[sh.anchor[1]];
        CHECK(lx == std::vector<std::string>{"u"});
        CHECK(ly == std::vector<std::string>{"w"});
        for (int v = 0; v < sh.n; v++) {
            CHECK(sh.marks[v].empty());
            CHECK(sh.neg_marks[v].empty());
        }
    }
}

TEST_CASE("decompose_basic contradictions and merging") {
    Expr ux = e_bracket(f_rel("U", {term_var("x")}));
    Expr nux = e_bracket(f_not(f_rel("U", {term_var("x")})));
    CHECK(decompose_basic(e_mul({ux, nux}), {"x"}, 2).empty());

    Expr w = e_weight("w", {term_var("x")});
    auto parts = decompose_basic(e_add({w, w}), {"x"}, 1);
    CHECK(parts.size() == 2); // anchor at a root / at a depth-1 node
    for (const auto& p : parts) CHECK(p.mult == 2);

    CHECK_THROWS_WITH_AS(decompose_basic(e_sum("x", w), {}, 1),
                         doctest::Contains("SyntaxError"), Error);
    CHECK_THROWS_WITH_AS(decompose_basic(w, {"y"}, 1),
                         doctest::Contains("UnknownSymbol"), Error);
}

TEST_CASE("decompose_basic matches the oracle on encoded structures") {
    auto sig = test_sig();
    struct Q {
        const char* text;
        std::vector<std::string> vars;
    };
    const Q queries[] = {
        {"[E(x,y)] * w(x) * u(y)", {"x", "y"}},
        {"[E(x,y)] * [E(y,z)] * w(y)", {"x", "y", "z"}},
        {"[!E(x,y)] * [x != y]", {"x", "y"}},
        {"[U(x)] * [!U(y)] * w(x)", {"x", "y"}},
        {"[E(x,y)] * [E(y,x)] * u(x)", {"x", "y"}},
        {"[E(x,x)] * w(x)", {"x"}},
        {"2 * [E(x,y)] + w(x) * u(y)", {"x", "y"}},
        {"[x = y] * w(x) * u(y)", {"x", "y"}},
        {"[E(x,y) | U(x)] * w(x)", {"x", "y"}},
    };
    for (const char* tok : {"nat", "minplus", "zmod:6", "free"}) {
        auto sr = make_semiring(tok);
        for (unsigned seed = 1; seed <= 3; seed++) {
            auto s = random_structure(6, seed, sr);
            auto f = encode_bounded_td(to_binary(s));
            auto weight = [&](const std::string& sym, int v) { return s.weight(sym, {v}); };
            for (const auto& q : queries) {
                Expr e = simplify(parse_query(q.text, sig), sig);
                auto parts = decompose_basic(e, q.vars, f.max_depth);
                for (const auto& p : parts) {
                    const Shape& sh = p.ls.shape;
                    for (int v = 0; v < sh.n; v++) {
                        std::vector<uint32_t> both;
                        std::set_intersection(sh.marks[v].begin(), sh.marks[v].end(),
                                              sh.neg_marks[v].begin(), sh.neg_marks[v].end(),
                                              std::back_inserter(both));
                        CHECK(both.empty());
                    }
                }
                Value got = shapes_brute_eval(parts, f, weight, sr);
                Value want = brute_eval(s, close_over(e, q.vars));
                CAPTURE(tok);
                CAPTURE(q.text);
                CAPTURE(seed);
                CHECK(sr->eq(got, want));
            }
        }
    }
}

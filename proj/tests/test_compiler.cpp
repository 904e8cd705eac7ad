#include <doctest.h>

#include "semicirc/compiler.hpp"
#include "semicirc/oracle.hpp"
#include "test_util.hpp"

using namespace semicirc;
using testutil::random_structure;
using testutil::test_sig;

namespace {

const char* kClosedQueries[] = {
    "sum x,y. [E(x,y)] * w(x) * u(y)",
    "sum x,y. [E(x,y) & !U(x)] * v(x,y)",
    "sum x,y. [!E(x,y)] * w(x) * u(y)",
    "sum x,y. [E(x,y) | E(y,x)] * v(x,y)",
    "sum x. w(f(x))",
    "sum x,y. [f(x)=f(y) & x!=y] * u(x)",
    "1 + 2 * (sum x. w(x) * [U(x)])",
    "sum x,y,z. [E(x,y)] * [E(y,z)] * [E(z,x)] * v(x,y) * v(y,z) * v(z,x)",
};

} // namespace

TEST_CASE("unify_reduce preserves semantics") {
    auto sig = test_sig();
    for (const char* tok : {"nat", "minplus", "zmod:6", "free"}) {
        auto sr = make_semiring(tok);
        for (unsigned seed = 1; seed <= 3; seed++) {
            auto s = random_structure(6, seed, sr);
            for (const char* q : kClosedQueries) {
                Expr e1 = simplify(parse_query(q, sig), sig);
                UnifyReduced ur = unify_reduce(s, e1);
                CAPTURE(tok);
                CAPTURE(q);
                CHECK(sr->eq(brute_eval(s, e1), brute_eval(ur.s, ur.e)));
                // rewritten expression survives another simplification pass
                CHECK(sr->eq(brute_eval(s, e1), brute_eval(ur.s, simplify(ur.e, ur.s.sig))));
            }
        }
    }
}

TEST_CASE("normalize_blocks hoists sums") {
    auto sig = test_sig();
    Expr e = simplify(parse_query("2 * (sum x. w(x)) * (sum y. u(y)) + 1", sig), sig);
    auto blocks = normalize_blocks(e);
    CHECK(blocks.size() == 2);
    bool saw2 = false, saw0 = false;
    for (const auto& b : blocks) {
        if (b.vars.size() == 2) saw2 = true;
        if (b.vars.empty()) saw0 = true;
        std::function<void(const Expr&)> nosum = [&](const Expr& x) {
            CHECK(x->k != ExprNode::K::Sum);
            for (const auto& k : x->kids) nosum(k);
        };
        nosum(b.body);
    }
    CHECK(saw2);
    CHECK(saw0);
}

TEST_CASE("color_split partitions a block") {
    auto sig = test_sig();
    for (const char* tok : {"nat", "free"}) {
        auto sr = make_semiring(tok);
        for (unsigned seed = 1; seed <= 2; seed++) {
            auto s = random_structure(7, seed, sr);
            Expr e = simplify(parse_query("sum x,y. [E(x,y)] * v(x,y)", sig), sig);
            UnifyReduced ur = unify_reduce(s, e);
            auto blocks = normalize_blocks(simplify(ur.e, ur.s.sig));
            REQUIRE(blocks.size() >= 1);
            auto coloring = low_treedepth_coloring(gaifman_graph(ur.s), 2, seed);
            Value want = brute_eval(s, e);
            Value got = sr->zero;
            for (const auto& b : blocks) {
                if (b.vars.empty()) {
                    got = sr->add(got, brute_eval(ur.s, b.body));
                    continue;
                }
                auto [sC, parts] = color_split(ur.s, b, coloring);
                for (const auto& part : parts) {
                    Expr closed = part.body;
                    for (auto it = b.vars.rbegin(); it != b.vars.rend(); ++it)
                        closed = e_sum(*it, closed);
                    got = sr->add(got, brute_eval(sC, closed));
                }
            }
            CAPTURE(tok);
            CHECK(sr->eq(got, want));
        }
    }
}

TEST_CASE("compile matches the oracle end to end") {
    auto sig = test_sig();
    std::vector<Semiring> srs;
    for (const char* tok : {"nat", "minplus", "zmod:6", "free"}) srs.push_back(make_semiring(tok));
    for (unsigned seed = 1; seed <= 2; seed++) {
        // same relational skeleton across semirings; weights differ
        std::vector<WeightedStructure> ss;
        for (const auto& sr : srs) ss.push_back(random_structure(6, seed, sr));
        for (const char* q : kClosedQueries) {
            Expr e = parse_query(q, sig);
            CompiledQuery cq = compile(ss[0], e);
            CHECK(cq.circuit.stats(0).max_perm_rows <= 6);
            for (size_t i = 0; i < srs.size(); i++) {
                CAPTURE(std::string(q));
                CAPTURE(srs[i]->name);
                CAPTURE(seed);
                CHECK(srs[i]->eq(cq.eval_on(ss[i], srs[i]), brute_eval(ss[i], e)));
            }
        }
    }
}

TEST_CASE("compile through the coloring path") {
    auto sig = test_sig();
    CompileOptions opt;
    opt.single_part_budget = 0; // force the color-split route
    for (const char* tok : {"nat", "minplus", "free"}) {
        auto sr = make_semiring(tok);
        for (unsigned seed = 1; seed <= 2; seed++) {
            auto s = random_structure(7, seed, sr);
            for (const char* q : {"sum x,y. [E(x,y)] * w(x) * u(y)",
                                  "sum x,y. [E(x,y) | E(y,x)] * v(x,y)",
                                  "sum x. w(x) * [!U(x)]"}) {
                Expr e = parse_query(q, sig);
                CompiledQuery cq = compile(s, e, opt);
                CAPTURE(tok);
                CAPTURE(q);
                CHECK(sr->eq(cq.eval_on(s, sr), brute_eval(s, e)));
            }
        }
    }
}

TEST_CASE("compile constants and stage dumps") {
    auto sig = test_sig();
    auto nat = make_semiring("nat");
    auto s = random_structure(4, 1, nat);
    CompileOptions opt;
    opt.keep_stages = true;
    CompiledQuery cq = compile(s, parse_query("3/2 + 2", sig), opt);
    CHECK(nat->eq(cq.eval_on(s, make_semiring("rat")), Value(Num::rat(7, 2))));
    CHECK(cq.stages.size() == 6);
    CHECK(cq.stages[0].first == "simplify");
    CHECK(cq.stages[5].second.find("# output=") != std::string::npos);

    CHECK_THROWS_WITH_AS(compile(s, parse_query("w(x)", sig)), doctest::Contains("SyntaxError"),
                         Error);
    CHECK_THROWS_WITH_AS(compile_open(s, parse_query("1", sig)),
                         doctest::Contains("SyntaxError"), Error);
}

TEST_CASE("compile_open probes match the oracle") {
    auto sig = test_sig();
    for (const char* tok : {"nat", "minplus", "free"}) {
        auto sr = make_semiring(tok);
        auto s = random_structure(5, 3, sr);
        struct Q {
            const char* text;
            int arity;
        };
        for (const Q& q : {Q{"w(x)", 1}, Q{"[E(x,y)] * v(x,y)", 2},
                           Q{"sum y. [E(x,y)] * w(y)", 1}}) {
            Expr e = parse_query(q.text, sig);
            CompiledQuery cq = compile_open(s, e);
            cq.eval_on(s, sr);
            std::vector<Tuple> pts;
            if (q.arity == 1)
                for (int a = 0; a < s.n(); a++) pts.push_back({a});
            else
                for (int a = 0; a < s.n(); a++)
                    for (int b = 0; b < s.n(); b++) pts.push_back({a, b});
            for (const auto& t : pts) {
                std::map<std::string, int> env;
                for (size_t i = 0; i < cq.probe_vars.size(); i++) env[cq.probe_vars[i]] = t[i];
                CAPTURE(tok);
                CAPTURE(std::string(q.text));
                Value want = brute_eval(s, e, env);
                CHECK(sr->eq(cq.probe(t), want));
                CHECK(sr->eq(cq.probe(t), want)); // probing is side-effect-free
            }
        }
    }
}

TEST_CASE("triangle provenance on the five-edge graph") {
    Signature sig;
    sig.add_relation("E", 2);
    sig.add_weight("v", 2);
    auto fr = make_semiring("free");
    WeightedStructure s;
    s.sig = sig;
    s.semiring = fr;
    for (const char* l : {"a", "b", "c", "d"}) s.add_element(l);
    auto E = [&](const char* x, const char* y) {
        Tuple t{s.element(x), s.element(y)};
        s.add_tuple("E", t);
        s.set_weight("v", t, Value(free_ident(std::string("e_") + x + y)));
    };
    E("a", "b");
    E("b", "c");
    E("c", "a");
    E("b", "d");
    E("d", "a");

    Expr f = parse_query("sum y,z. [E(x,y)] * [E(y,z)] * [E(z,x)] * v(x,y) * v(y,z) * v(z,x)",
                         sig);
    CompiledQuery cq = compile_open(s, f);
    cq.eval_on(s, fr);
    Value at_a = cq.probe({s.element("a")});
    FreeElem want = free_add(
        free_mul(free_mul(free_ident("e_ab"), free_ident("e_bc")), free_ident("e_ca")),
        free_mul(free_mul(free_ident("e_ab"), free_ident("e_bd")), free_ident("e_da")));
    CHECK(free_equal(at_a.fe(), want));
    CHECK(fr->is_zero(cq.probe({s.element("c")})) ==
          false); // c lies on the abc triangle as well
}

TEST_CASE("compiled circuits track weight updates") {
    auto sig = test_sig();
    auto nat = make_semiring("nat");
    auto s = random_structure(6, 5, nat);
    Expr e = parse_query("sum x,y. [E(x,y)] * v(x,y) * w(x)", sig);
    CompiledQuery cq = compile(s, e);
    cq.eval_on(s, nat);
    std::mt19937 rng(7);
    for (int step = 0; step < 30; step++) {
        const auto& keys = cq.circuit.input_keys();
        const InputKey& k = keys[rng() % keys.size()];
        // nonzero weights must stay on relation tuples; off-relation inputs
        // exist in the circuit but are pinned to zero
        if (k.tuple.size() > 1 && !s.in_some_relation(k.tuple)) continue;
        Value nv = nat->sample(rng);
        s.set_weight(k.sym, k.tuple, nv);
        Value out = cq.circuit.update_input(k, nv);
        CHECK(nat->eq(out, brute_eval(s, e)));
    }
    CHECK(cq.circuit.check_cache_consistency());
}

TEST_CASE("compiled size stays near-linear") {
    auto sig = test_sig();
    auto nat = make_semiring("nat");
    Expr e = parse_query("sum x,y. [E(x,y)] * v(x,y)", sig);
    std::vector<long long> sizes;
    for (int n : {128, 256, 512}) {
        auto s = random_structure(n, 11, nat);
        CompiledQuery cq = compile(s, e);
        sizes.push_back(cq.circuit.stats(0).size);
    }
    for (size_t i = 1; i < sizes.size(); i++)
        CHECK((double)sizes[i] <= 2.5 * (double)sizes[i - 1] + 64.0);
}

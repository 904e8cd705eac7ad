#include <doctest.h>

#include "semicirc/oracle.hpp"
#include "test_util.hpp"

using namespace semicirc;
using testutil::random_structure;
using testutil::test_sig;

namespace {

bool is_simple_literal(const Formula& f) {
    auto var_atom = [](const Formula& a) {
        if (a->k != FormulaNode::K::Rel && a->k != FormulaNode::K::Eq) return false;
        for (const auto& t : a->args)
            if (!t->is_var()) return false;
        return true;
    };
    if (f->k == FormulaNode::K::True || f->k == FormulaNode::K::False) return true;
    if (f->k == FormulaNode::K::Not) return var_atom(f->kids[0]);
    return var_atom(f);
}

void check_simple(const Expr& e) {
    switch (e->k) {
        case ExprNode::K::Const:
            return;
        case ExprNode::K::Weight:
            for (const auto& t : e->args) CHECK(t->is_var());
            return;
        case ExprNode::K::Bracket:
            CHECK(is_simple_literal(e->bracket));
            return;
        default:
            for (const auto& k : e->kids) check_simple(k);
    }
}

} // namespace

TEST_CASE("parse_query basics") {
    auto sig = test_sig();
    Expr tri = parse_query(
        "sum x,y,z. [E(x,y) & E(y,z) & E(z,x)] * v(x,y)*v(y,z)*v(z,x)", sig);
    CHECK(tri->k == ExprNode::K::Sum);
    CHECK(free_vars(tri).empty());

    Expr one = parse_query("1", sig);
    CHECK(one->k == ExprNode::K::Const);
    CHECK(one->cval == Num::of(1));

    Expr r = parse_query("3/4 + w(x) * [U(x) | x != y]", sig);
    CHECK(r->k == ExprNode::K::Add);
    CHECK(free_vars(r) == std::set<std::string>{"x", "y"});

    // sum binds a product, '+' stays outside
    Expr p = parse_query("sum x. w(x) * u(x) + 1", sig);
    CHECK(p->k == ExprNode::K::Add);

    CHECK_THROWS_WITH_AS(parse_query("[exists y. E(x,y)]", sig),
                         doctest::Contains("QuantifierInBracket"), Error);
    CHECK_THROWS_WITH_AS(parse_query("q(x)", sig), doctest::Contains("UnknownSymbol"), Error);
    CHECK_THROWS_WITH_AS(parse_query("E(x,y)", sig), doctest::Contains("UnknownSymbol"), Error);
    CHECK_THROWS_WITH_AS(parse_query("w(x,y)", sig), doctest::Contains("SyntaxError"), Error);
    CHECK_THROWS_WITH_AS(parse_query("w(x) +", sig), doctest::Contains("SyntaxError"), Error);
    CHECK_THROWS_WITH_AS(parse_query("[U(x)]@nat", sig), doctest::Contains("SyntaxError"), Error);
}

TEST_CASE("free_vars and binding") {
    auto sig = test_sig();
    CHECK(free_vars(parse_query("sum x. w(x)", sig)).empty());
    CHECK(free_vars(parse_query("v(x,y)", sig)) == std::set<std::string>{"x", "y"});
    CHECK(free_vars(parse_query("[x=y] * (sum y. u(y))", sig)) ==
          std::set<std::string>{"x", "y"});
}

TEST_CASE("simplify produces simple form") {
    auto sig = test_sig();
    const char* queries[] = {
        "sum x,y. [E(x,y) | E(y,x)] * w(x)",
        "sum x. w(f(x))",
        "sum x,y. [!(E(x,y) & U(x))] * v(x,y) * [E(x,y)]",
        "sum x,y. [f(x)=f(y) & x!=y] * u(x)",
        "sum x. [!(f(x)=x)]",
        "sum x. [E(f(x),x) | !U(f(f(x)))] * w(x)",
        "2 * (sum x. w(x)) + sum x,y. [E(x,y)]*v(x,y)",
    };
    for (const char* q : queries) {
        Expr e = parse_query(q, sig);
        Expr se = simplify(e, sig);
        check_simple(se);
        CHECK(free_vars(se) == free_vars(e));
    }
}

TEST_CASE("simplify preserves semantics") {
    auto sig = test_sig();
    const char* queries[] = {
        "sum x,y. [E(x,y) | E(y,x)] * w(x)",
        "sum x. w(f(x))",
        "sum x,y. [!(E(x,y) & U(x))] * v(x,y) * [E(x,y)]",
        "sum x,y. [f(x)=f(y) & x!=y] * u(x)",
        "sum x. [!(f(x)=x)] * w(x)",
        "sum x,y. [E(x,y) & !(f(x)=y)]",
        "1 + sum x. [U(x) | f(x)=x] * 2",
    };
    for (const char* tok : {"nat", "minplus", "zmod:6", "free"}) {
        auto sr = make_semiring(tok);
        for (unsigned seed = 1; seed <= 4; seed++) {
            auto s = random_structure(6, seed, sr);
            for (const char* q : queries) {
                Expr e = parse_query(q, sig);
                Expr se = simplify(e, sig);
                CAPTURE(tok);
                CAPTURE(q);
                CHECK(sr->eq(brute_eval(s, e), brute_eval(s, se)));
            }
        }
    }
}

TEST_CASE("simplify rewrites under distinct binders") {
    auto sig = test_sig();
    // the same binder name reused in sibling scopes must come out distinct
    Expr e = parse_query("(sum x. w(x)) * (sum x. u(x))", sig);
    Expr se = simplify(e, sig);
    std::function<void(const Expr&, std::set<std::string>&)> binders =
        [&](const Expr& x, std::set<std::string>& out) {
            if (x->k == ExprNode::K::Sum) {
                CHECK(!out.count(x->var));
                out.insert(x->var);
            }
            for (const auto& k : x->kids) binders(k, out);
        };
    std::set<std::string> seen;
    binders(se, seen);
    CHECK(seen.size() == 2);
}

TEST_CASE("oracle brute_eval basics") {
    auto sig = test_sig();
    auto nat = make_semiring("nat");
    WeightedStructure s;
    s.sig = sig;
    s.semiring = nat;
    for (int i = 0; i < 3; i++) s.add_element(std::to_string(i));
    for (int i = 0; i < 3; i++) {
        s.set_weight("w", {i}, Value(Num::of(1)));
        s.set_fun("f", {i}, i);
    }
    CHECK(nat->eq(brute_eval(s, parse_query("sum x. w(x)", sig)), Value(Num::of(3))));
    CHECK(nat->eq(brute_eval(s, parse_query("sum x. [x != x]", sig)), Value(Num::of(0))));
    CHECK(nat->eq(brute_eval(s, parse_query("sum x. [f(x)=x]", sig)), Value(Num::of(3))));

    auto big = random_structure(13, 1, nat);
    CHECK_THROWS_WITH_AS(brute_eval(big, parse_query("1", sig)),
                         doctest::Contains("BudgetExceeded"), Error);
}

TEST_CASE("brute_answers") {
    auto sig = test_sig();
    auto b = make_semiring("bool");
    WeightedStructure s;
    s.sig = sig;
    s.semiring = b;
    for (int i = 0; i < 3; i++) s.add_element(std::to_string(i));
    s.add_tuple("E", {0, 1});
    s.add_tuple("E", {1, 2});
    Formula f = f_rel("E", {term_var("x"), term_var("y")});
    auto ans = brute_answers(s, f, {"x", "y"});
    CHECK(ans == std::vector<Tuple>{{0, 1}, {1, 2}});
    auto none = brute_answers(s, f_and({f_eq(term_var("x"), term_var("y")), f_not(f_eq(term_var("x"), term_var("y")))}), {"x", "y"});
    CHECK(none.empty());
}

#pragma once

#include <memory>
#include <set>

#include "semicirc/structure.hpp"

namespace semicirc {

// --- terms: variables and (nested) function applications ----------------------

struct TermNode;
using Term = std::shared_ptr<const TermNode>;

struct TermNode {
    std::string fun; // empty: variable
    std::string var;
    std::vector<Term> args;
    bool is_var() const { return fun.empty(); }
};

Term term_var(const std::string& v);
Term term_fun(const std::string& f, std::vector<Term> args);
std::string term_str(const Term& t);

// --- quantifier-free formulas ---------------------------------------------------

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
    enum class K : uint8_t { Rel, Eq, And, Or, Not, True, False };
    K k;
    std::string rel;        // Rel
    std::vector<Term> args; // Rel; Eq uses args[0], args[1]
    std::vector<Formula> kids;
};

Formula f_rel(const std::string& rel, std::vector<Term> args);
Formula f_eq(Term a, Term b);
Formula f_and(std::vector<Formula> kids);
Formula f_or(std::vector<Formula> kids);
Formula f_not(Formula a);
Formula f_true();
Formula f_false();
std::string formula_str(const Formula& f);

// --- weighted expressions --------------------------------------------------------

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class K : uint8_t { Const, Weight, Bracket, Add, Mul, Sum };
    K k;
    Num cval = Num::of(0);  // Const
    std::string wsym;       // Weight
    std::vector<Term> args; // Weight
    Formula bracket;        // Bracket
    std::vector<Expr> kids; // Add/Mul (n-ary), Sum (1)
    std::string var;        // Sum
};

Expr e_const(const Num& v);
Expr e_weight(const std::string& w, std::vector<Term> args);
Expr e_bracket(Formula f);
Expr e_add(std::vector<Expr> kids); // flattens; empty -> Const(0)... kept literal
Expr e_mul(std::vector<Expr> kids);
Expr e_sum(const std::string& var, Expr body);
std::string expr_str(const Expr& e);

// Parse a weighted query against a signature. Rejects quantifiers inside
// brackets and any semiring annotations (those belong to nested formulas).
Expr parse_query(const std::string& text, const Signature& sig);

std::set<std::string> free_vars(const Expr& e);
std::set<std::string> formula_vars(const Formula& f);

// Rewrite to simple form: all binders distinct, weights applied to single
// variables, every bracket a single (possibly negated) relation or equality
// literal over variables; function terms are replaced by their graph
// relations `@graph:<f>` (functions must be total for negation soundness).
Expr simplify(const Expr& e, const Signature& sig);

// Graph-relation naming for eliminated function symbols.
std::string graph_rel(const std::string& fun);

// Signature after simplify: function symbols replaced by graph relations.
Signature relational_signature(const Signature& sig);

// --- nested formulas (FO_G[C]) ---------------------------------------------------

struct NestedNode;
using Nested = std::shared_ptr<const NestedNode>;

struct NestedNode {
    enum class K : uint8_t { Leaf, Conn, Add, Mul, Sum };
    K k;
    std::string semiring;     // output semiring token of this node
    Expr leaf;                // Leaf: connective-free weighted expression
    std::string conn;         // Conn
    std::string guard_rel;    // Conn: guard relation symbol
    std::vector<Term> guard_args;
    std::vector<Nested> kids; // Conn args / Add / Mul / Sum body
    std::string var;          // Sum
};

struct ConnSig {
    std::string name;
    std::vector<std::string> arg_semirings;
    std::string result_semiring;
};

// Parse a nested formula; `conns` declares the usable connectives, `def_sr`
// is the semiring of unannotated subformulas. Guard rule: the guard's
// variables must cover the free variables of every connective argument.
Nested parse_nested(const std::string& text, const Signature& sig,
                    const std::vector<ConnSig>& conns, const std::string& def_sr);

std::set<std::string> nested_free_vars(const Nested& n);

} // namespace semicirc

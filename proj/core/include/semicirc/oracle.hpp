#pragma once

#include "semicirc/circuit.hpp"
#include "semicirc/expr.hpp"

namespace semicirc {

struct OracleBudget {
    int max_domain = 12;
    int max_vars = 4;
};

// Direct recursive evaluation of a weighted expression: sums iterate the whole
// domain, brackets are decided against the structure, weights read the weight
// table. `env` binds the free variables. Throws BudgetExceeded over budget.
Value brute_eval(const WeightedStructure& s, const Expr& e,
                 const std::map<std::string, int>& env = {}, OracleBudget budget = {});

// Truth of a quantifier-free formula under an assignment (graph relations of
// eliminated functions are understood natively).
bool brute_formula(const WeightedStructure& s, const Formula& f,
                   const std::map<std::string, int>& env);

// All assignments of `vars` satisfying the formula, in lexicographic order.
std::vector<Tuple> brute_answers(const WeightedStructure& s, const Formula& f,
                                 const std::vector<std::string>& vars, OracleBudget budget = {});

// Injective-map permanent (shared with the circuit module, re-exported for tests).
inline Value brute_perm(const std::vector<std::vector<Value>>& m, const Semiring& s) {
    return perm_reference(m, s);
}

} // namespace semicirc

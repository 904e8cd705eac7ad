#include "semicirc/oracle.hpp"

namespace semicirc {

namespace {

// evaluates a term to an element; nullopt when a partial function is undefined
std::optional<int> eval_term(const WeightedStructure& s, const Term& t,
                             const std::map<std::string, int>& env) {
    if (t->is_var()) {
        auto it = env.find(t->var);
        if (it == env.end()) fail("UnknownSymbol", "unbound variable " + t->var);
        return it->second;
    }
    Tuple args;
    for (const auto& a : t->args) {
        auto v = eval_term(s, a, env);
        if (!v) return std::nullopt;
        args.push_back(*v);
    }
    return s.apply_fun(t->fun, args);
}

bool atom_holds(const WeightedStructure& s, const std::string& rel, const Tuple& t) {
    if (rel.rfind("@graph:", 0) == 0) {
        std::string fun = rel.substr(7);
        Tuple args(t.begin(), t.end() - 1);
        auto img = s.apply_fun(fun, args);
        return img && *img == t.back();
    }
    return s.has_tuple(rel, t);
}

int count_sums(const Expr& e) {
    int c = e->k == ExprNode::K::Sum ? 1 : 0;
    for (const auto& k : e->kids) c += count_sums(k);
    return c;
}

Value eval_expr(const WeightedStructure& s, const Expr& e, std::map<std::string, int>& env) {
    const auto& sr = s.semiring;
    switch (e->k) {
        case ExprNode::K::Const:
            return sr->from_num(e->cval);
        case ExprNode::K::Weight: {
            Tuple t;
            for (const auto& a : e->args) {
                auto v = eval_term(s, a, env);
                if (!v) return sr->zero;
                t.push_back(*v);
            }
            return s.weight(e->wsym, t);
        }
        case ExprNode::K::Bracket:
            return sr->iverson(brute_formula(s, e->bracket, env));
        case ExprNode::K::Add: {
            Value acc = sr->zero;
            for (const auto& k : e->kids) acc = sr->add(acc, eval_expr(s, k, env));
            return acc;
        }
        case ExprNode::K::Mul: {
            Value acc = sr->one;
            for (const auto& k : e->kids) acc = sr->mul(acc, eval_expr(s, k, env));
            return acc;
        }
        case ExprNode::K::Sum: {
            Value acc = sr->zero;
            for (int a = 0; a < s.n(); a++) {
                env[e->var] = a;
                acc = sr->add(acc, eval_expr(s, e->kids[0], env));
            }
            env.erase(e->var);
            return acc;
        }
    }
    fail("SyntaxError", "unknown expression node");
}

} // namespace

bool brute_formula(const WeightedStructure& s, const Formula& f,
                   const std::map<std::string, int>& env) {
    switch (f->k) {
        case FormulaNode::K::True:
            return true;
        case FormulaNode::K::False:
            return false;
        case FormulaNode::K::Rel: {
            Tuple t;
            for (const auto& a : f->args) {
                auto v = eval_term(s, a, env);
                if (!v) return false;
                t.push_back(*v);
            }
            return atom_holds(s, f->rel, t);
        }
        case FormulaNode::K::Eq: {
            auto a = eval_term(s, f->args[0], env), b = eval_term(s, f->args[1], env);
            return a && b && *a == *b;
        }
        case FormulaNode::K::And:
            for (const auto& k : f->kids)
                if (!brute_formula(s, k, env)) return false;
            return true;
        case FormulaNode::K::Or:
            for (const auto& k : f->kids)
                if (brute_formula(s, k, env)) return true;
            return false;
        case FormulaNode::K::Not:
            return !brute_formula(s, f->kids[0], env);
    }
    fail("SyntaxError", "unknown formula node");
}

Value brute_eval(const WeightedStructure& s, const Expr& e,
                 const std::map<std::string, int>& env, OracleBudget budget) {
    if (s.n() > budget.max_domain)
        fail("BudgetExceeded", "oracle domain limit " + std::to_string(budget.max_domain));
    if (count_sums(e) > 2 * budget.max_vars)
        fail("BudgetExceeded", "oracle variable limit " + std::to_string(budget.max_vars));
    std::map<std::string, int> mutenv = env;
    return eval_expr(s, e, mutenv);
}

std::vector<Tuple> brute_answers(const WeightedStructure& s, const Formula& f,
                                 const std::vector<std::string>& vars, OracleBudget budget) {
    if (s.n() > budget.max_domain) fail("BudgetExceeded", "oracle domain limit");
    if ((int)vars.size() > budget.max_vars) fail("BudgetExceeded", "oracle variable limit");
    std::vector<Tuple> out;
    Tuple t(vars.size(), 0);
    std::map<std::string, int> env;
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == vars.size()) {
            if (brute_formula(s, f, env)) out.push_back(t);
            return;
        }
        for (int a = 0; a < s.n(); a++) {
            t[i] = a;
            env[vars[i]] = a;
            rec(i + 1);
        }
        env.erase(vars[i]);
    };
    rec(0);
    return out;
}

} // namespace semicirc

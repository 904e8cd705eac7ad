#include "semicirc/nested.hpp"

namespace semicirc {

// --- connective registry -----------------------------------------------------

void ConnectiveRegistry::add(const std::string& name, std::vector<std::string> arg_srs,
                             const std::string& result_sr,
                             std::function<Value(const std::vector<Value>&)> fn) {
    if (find(name)) fail("SyntaxError", "connective " + name + " registered twice");
    conns_.push_back({{name, std::move(arg_srs), result_sr}, std::move(fn)});
}

const Connective* ConnectiveRegistry::find(const std::string& name) const {
    for (const auto& c : conns_)
        if (c.sig.name == name) return &c;
    return nullptr;
}

std::vector<ConnSig> ConnectiveRegistry::sigs() const {
    std::vector<ConnSig> out;
    for (const auto& c : conns_) out.push_back(c.sig);
    return out;
}

namespace {

Value bool_of(bool b) { return Value(Num::of(b ? 1 : 0)); }

} // namespace

const ConnectiveRegistry& ConnectiveRegistry::builtins() {
    static const ConnectiveRegistry reg = [] {
        ConnectiveRegistry r;
        r.add("lt", {"rat", "rat"}, "bool", [](const std::vector<Value>& a) {
            return bool_of(num_cmp(a[0].num(), a[1].num()) < 0);
        });
        r.add("leq", {"rat", "rat"}, "bool", [](const std::vector<Value>& a) {
            return bool_of(num_cmp(a[0].num(), a[1].num()) <= 0);
        });
        r.add("eq", {"rat", "rat"}, "bool", [](const std::vector<Value>& a) {
            return bool_of(a[0].num() == a[1].num());
        });
        // total extension: anything over zero (or an infinity anywhere) is zero
        r.add("div", {"rat", "rat"}, "rat", [](const std::vector<Value>& a) {
            const Num &p = a[0].num(), &q = a[1].num();
            if (!p.finite() || !q.finite() || q == Num::of(0)) return Value(Num::of(0));
            return Value(num_div(p, q));
        });
        r.add("neg", {"rat"}, "rat", [](const std::vector<Value>& a) {
            return Value(num_sub(Num::of(0), a[0].num()));
        });
        r.add("iverson", {"rat"}, "bool", [](const std::vector<Value>& a) {
            return bool_of(a[0].num() != Num::of(0));
        });
        return r;
    }();
    return reg;
}

// --- compiled evaluation -------------------------------------------------------

namespace {

// after materialization the tree is connective-free; fold same-semiring
// subtrees back into single expressions so the remainder compiles as one query
Nested recollapse(const Nested& n) {
    NestedNode m = *n;
    for (auto& k : m.kids) k = recollapse(k);
    bool leafs = m.k != NestedNode::K::Leaf;
    for (const auto& k : m.kids)
        leafs = leafs && k->k == NestedNode::K::Leaf && k->semiring == m.semiring;
    if (leafs) {
        std::vector<Expr> es;
        for (const auto& k : m.kids) es.push_back(k->leaf);
        NestedNode lf;
        lf.k = NestedNode::K::Leaf;
        lf.semiring = m.semiring;
        switch (m.k) {
            case NestedNode::K::Add: lf.leaf = e_add(std::move(es)); break;
            case NestedNode::K::Mul: lf.leaf = e_mul(std::move(es)); break;
            case NestedNode::K::Sum: lf.leaf = e_sum(m.var, es[0]); break;
            default: return std::make_shared<const NestedNode>(std::move(m));
        }
        return std::make_shared<const NestedNode>(std::move(lf));
    }
    return std::make_shared<const NestedNode>(std::move(m));
}

} // namespace

NestedEvaluation::NestedEvaluation(const WeightedStructure& s, const Nested& phi,
                                   const ConnectiveRegistry& reg, const CompileOptions& opt)
    : s_(s), reg_(reg), opt_(opt) {
    for (const auto& v : nested_free_vars(phi)) vars_.push_back(v);
    root_ = recollapse(strip(phi));
}

Semiring NestedEvaluation::handle(const std::string& token) {
    auto it = srs_.find(token);
    if (it == srs_.end()) it = srs_.emplace(token, make_semiring(token)).first;
    return it->second;
}

Nested NestedEvaluation::strip(const Nested& n) {
    NestedNode m = *n;
    for (auto& k : m.kids) k = strip(k);
    if (n->k != NestedNode::K::Conn) return std::make_shared<const NestedNode>(std::move(m));

    const Connective* c = reg_.find(m.conn);
    if (!c) fail("UnregisteredConnective", m.conn);
    std::string sym = "@m:" + std::to_string(mat_counter_++);
    s_.sig.add_weight(sym, (int)m.guard_args.size());
    for (const Tuple& t : s_.tuples(m.guard_rel)) {
        std::map<std::string, int> env;
        bool consistent = true;
        for (size_t i = 0; i < t.size(); i++) {
            const std::string& v = m.guard_args[i]->var;
            auto it = env.find(v);
            if (it != env.end() && it->second != t[i]) {
                consistent = false; // repeated guard variable, off-diagonal tuple
                break;
            }
            env[v] = t[i];
        }
        if (!consistent) continue;
        std::vector<Value> args;
        args.reserve(m.kids.size());
        // numeric reinterpretation across carriers is the identity, so the
        // sub-results feed the connective directly
        for (const auto& kid : m.kids) args.push_back(eval_cf(kid, env));
        s_.set_weight(sym, t, c->fn(args));
    }
    // the guard bracket pins tuples outside the relation to the remainder
    // semiring's zero, whatever the structure's default weight is
    NestedNode lf;
    lf.k = NestedNode::K::Leaf;
    lf.semiring = m.semiring;
    lf.leaf = e_mul({e_bracket(f_rel(m.guard_rel, m.guard_args)), e_weight(sym, m.guard_args)});
    return std::make_shared<const NestedNode>(std::move(lf));
}

NestedEvaluation::LeafPlan& NestedEvaluation::plan_for(const Nested& n) {
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    LeafPlan pl;
    pl.sr = handle(n->semiring);
    if (free_vars(n->leaf).empty()) {
        pl.cq = compile(s_, n->leaf, opt_);
        pl.closed_val = pl.cq.eval_on(s_, pl.sr);
    } else {
        pl.cq = compile_open(s_, n->leaf, opt_);
        pl.cq.eval_on(s_, pl.sr); // prime the probe state
        pl.open = true;
    }
    return plans_.emplace(n, std::move(pl)).first->second;
}

Value NestedEvaluation::eval_cf(const Nested& n, std::map<std::string, int>& env) {
    switch (n->k) {
        case NestedNode::K::Leaf: {
            LeafPlan& pl = plan_for(n);
            if (!pl.open) return pl.closed_val;
            Tuple t;
            for (const auto& v : pl.cq.probe_vars) {
                auto it = env.find(v);
                if (it == env.end()) fail("TypeMismatch", "unbound variable " + v);
                t.push_back(it->second);
            }
            return pl.cq.probe(t);
        }
        case NestedNode::K::Conn:
            fail("TypeMismatch", "connective survived materialization");
        case NestedNode::K::Add:
        case NestedNode::K::Mul: {
            auto sr = handle(n->semiring);
            bool mul = n->k == NestedNode::K::Mul;
            Value acc = mul ? sr->one : sr->zero;
            for (const auto& k : n->kids) {
                Value v = eval_cf(k, env);
                acc = mul ? sr->mul(acc, v) : sr->add(acc, v);
            }
            return acc;
        }
        case NestedNode::K::Sum: {
            auto sr = handle(n->semiring);
            Value acc = sr->zero;
            auto old = env.find(n->var);
            std::optional<int> saved;
            if (old != env.end()) saved = old->second;
            for (int a = 0; a < s_.n(); a++) {
                env[n->var] = a;
                acc = sr->add(acc, eval_cf(n->kids[0], env));
            }
            if (saved) env[n->var] = *saved;
            else env.erase(n->var);
            return acc;
        }
    }
    fail("TypeMismatch", "unknown nested node");
}

Value NestedEvaluation::value() {
    if (!vars_.empty()) fail("TypeMismatch", "open formula; use probe() or answers()");
    std::map<std::string, int> env;
    return eval_cf(root_, env);
}

Value NestedEvaluation::probe(const Tuple& t) {
    if (t.size() != vars_.size()) fail("ArityMismatch", "probe tuple");
    std::map<std::string, int> env;
    for (size_t i = 0; i < vars_.size(); i++) env[vars_[i]] = t[i];
    return eval_cf(root_, env);
}

EnumSession NestedEvaluation::answer_session() {
    if (!boolean() || vars_.empty())
        fail("TypeMismatch", "answer enumeration needs an open boolean-valued formula");
    int k = (int)vars_.size();
    auto sr = handle("bool");
    WeightedStructure aux;
    aux.semiring = sr;
    aux.sig.add_relation("@sat", k);
    for (int i = 0; i < s_.n(); i++) aux.add_element(s_.labels[i]);
    Tuple t((size_t)k, 0);
    std::function<void(int)> scan = [&](int i) {
        if (i == k) {
            if (!sr->is_zero(probe(t))) aux.add_tuple("@sat", t);
            return;
        }
        for (int a = 0; a < s_.n(); a++) {
            t[i] = a;
            scan(i + 1);
        }
    };
    scan(0);
    std::vector<Term> args;
    for (const auto& v : vars_) args.push_back(term_var(v));
    return enumerate_answers(aux, f_rel("@sat", std::move(args)), vars_, opt_);
}

std::vector<Tuple> NestedEvaluation::answers() { return answer_session().answers(); }

// --- reference interpreter -------------------------------------------------------

Value brute_nested(const WeightedStructure& s, const Nested& phi, const ConnectiveRegistry& reg,
                   const std::map<std::string, int>& env, OracleBudget budget) {
    if (s.n() > budget.max_domain)
        fail("BudgetExceeded", "oracle domain limit " + std::to_string(budget.max_domain));
    std::map<std::string, WeightedStructure> copies; // structure per leaf semiring
    std::map<std::string, Semiring> srs;
    auto handle = [&](const std::string& tok) {
        auto it = srs.find(tok);
        if (it == srs.end()) it = srs.emplace(tok, make_semiring(tok)).first;
        return it->second;
    };
    auto with_sr = [&](const std::string& tok) -> const WeightedStructure& {
        auto it = copies.find(tok);
        if (it == copies.end()) {
            WeightedStructure c = s;
            c.semiring = handle(tok);
            it = copies.emplace(tok, std::move(c)).first;
        }
        return it->second;
    };
    std::map<std::string, int> mutenv = env;
    std::function<Value(const Nested&)> rec = [&](const Nested& n) -> Value {
        switch (n->k) {
            case NestedNode::K::Leaf:
                return brute_eval(with_sr(n->semiring), n->leaf, mutenv, budget);
            case NestedNode::K::Conn: {
                Tuple t;
                for (const auto& a : n->guard_args) {
                    auto it = mutenv.find(a->var);
                    if (it == mutenv.end()) fail("TypeMismatch", "unbound variable " + a->var);
                    t.push_back(it->second);
                }
                if (!s.has_tuple(n->guard_rel, t)) return handle(n->semiring)->zero;
                const Connective* c = reg.find(n->conn);
                if (!c) fail("UnregisteredConnective", n->conn);
                std::vector<Value> args;
                for (const auto& k : n->kids) args.push_back(rec(k));
                return c->fn(args);
            }
            case NestedNode::K::Add:
            case NestedNode::K::Mul: {
                auto sr = handle(n->semiring);
                bool mul = n->k == NestedNode::K::Mul;
                Value acc = mul ? sr->one : sr->zero;
                for (const auto& k : n->kids)
                    acc = mul ? sr->mul(acc, rec(k)) : sr->add(acc, rec(k));
                return acc;
            }
            case NestedNode::K::Sum: {
                auto sr = handle(n->semiring);
                Value acc = sr->zero;
                auto it = mutenv.find(n->var);
                std::optional<int> saved;
                if (it != mutenv.end()) saved = it->second;
                for (int a = 0; a < s.n(); a++) {
                    mutenv[n->var] = a;
                    acc = sr->add(acc, rec(n->kids[0]));
                }
                if (saved) mutenv[n->var] = *saved;
                else mutenv.erase(n->var);
                return acc;
            }
        }
        fail("TypeMismatch", "unknown nested node");
    };
    return rec(phi);
}

} // namespace semicirc

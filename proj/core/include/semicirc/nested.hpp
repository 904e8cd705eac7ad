#pragma once

#include "semicirc/enumerate.hpp"
#include "semicirc/oracle.hpp"

namespace semicirc {

// A named connective: an arbitrary total function between semiring carriers,
// applied pointwise under a guard relation.
struct Connective {
    ConnSig sig;
    std::function<Value(const std::vector<Value>&)> fn;
};

class ConnectiveRegistry {
  public:
    void add(const std::string& name, std::vector<std::string> arg_srs,
             const std::string& result_sr, std::function<Value(const std::vector<Value>&)> fn);
    const Connective* find(const std::string& name) const;
    std::vector<ConnSig> sigs() const; // for parse_nested

    // lt/leq/eq : rat,rat -> bool;  div : rat,rat -> rat with x/0 = 0;
    // neg : rat -> rat;             iverson : rat -> bool ([v != 0])
    static const ConnectiveRegistry& builtins();

  private:
    std::vector<Connective> conns_;
};

// Evaluates a nested formula by induction on its guarded connectives: each
// innermost connective is materialized as a fresh weight symbol by one scan
// over its guard relation (zero outside the guard), and the connective-free
// remainder runs through the circuit compiler. Boolean-valued open formulas
// additionally expose answer enumeration.
class NestedEvaluation {
  public:
    NestedEvaluation(const WeightedStructure& s, const Nested& phi,
                     const ConnectiveRegistry& reg = ConnectiveRegistry::builtins(),
                     const CompileOptions& opt = {});

    const std::vector<std::string>& vars() const { return vars_; } // sorted free variables
    const std::string& semiring() const { return root_->semiring; }
    bool boolean() const { return root_->semiring == "bool"; }

    Value value();               // closed formulas
    Value probe(const Tuple& t); // open formulas: tuple in vars() order

    // boolean open formulas: materializes the satisfying tuples into an
    // indicator relation and serves them through a constant-delay session
    EnumSession answer_session();
    std::vector<Tuple> answers();

  private:
    struct LeafPlan {
        CompiledQuery cq;
        Semiring sr;
        bool open = false;
        Value closed_val; // open == false
    };

    Semiring handle(const std::string& token);
    Nested strip(const Nested& n); // post-order connective materialization
    Value eval_cf(const Nested& n, std::map<std::string, int>& env);
    LeafPlan& plan_for(const Nested& n);

    WeightedStructure s_; // copy extended with materialized weights
    ConnectiveRegistry reg_;
    CompileOptions opt_;
    Nested root_;
    std::vector<std::string> vars_;
    std::map<Nested, LeafPlan> plans_; // keyed by owning pointer: nodes stay alive
    std::map<std::string, Semiring> srs_;
    int mat_counter_ = 0;
};

// Direct recursive interpreter over the nested AST, independent of the
// compiler pipeline; reference semantics for tests. `env` binds free variables.
Value brute_nested(const WeightedStructure& s, const Nested& phi, const ConnectiveRegistry& reg,
                   const std::map<std::string, int>& env = {}, OracleBudget budget = {});

} // namespace semicirc

#pragma once

#include <functional>
#include <set>
#include <unordered_map>

#include "semicirc/semiring.hpp"
#include "semicirc/structure.hpp"

namespace semicirc {

struct InputKey {
    std::string sym;
    Tuple tuple;
    bool operator==(const InputKey& o) const { return sym == o.sym && tuple == o.tuple; }
};

struct InputKeyHash {
    size_t operator()(const InputKey& k) const {
        size_t h = std::hash<std::string>{}(k.sym);
        for (int x : k.tuple) h = hash_mix(h, (size_t)x);
        return h;
    }
};

struct Gate {
    enum class K : uint8_t { Input, Const, Add, Mul, Perm, Test, Thr, Mod };
    K k = K::Const;
    std::vector<uint32_t> in; // Perm: row-major rows x cols
    uint16_t rows = 0, cols = 0;
    // Const: payload selected by ctag; Test: comparison constant (cnum)
    uint8_t ctag = 0; // 0 = cnum, 1 = semiring zero, 2 = semiring one
    Num cnum = Num::of(0);
    long long p1 = 0, p2 = 0; // Thr: ones in [p1,p2]; Mod: ones % p1 == p2
};

struct CircuitStats {
    long long size = 0;      // gate count
    long long edges = 0;
    int depth = 0;
    int max_fanout = 0;
    int max_perm_rows = 0;
    long long max_reachout = -1; // -1: not computed (circuit too large)
};

enum class LowerStrategy { Generic, Ring, Finite };

class Circuit {
  public:
    std::vector<Gate> gates;
    uint32_t output = 0;

    // --- construction (inputs of a gate must already exist) ---
    uint32_t input(const InputKey& key);
    uint32_t constant(const Num& v);
    uint32_t const_zero();
    uint32_t const_one();
    uint32_t add(std::vector<uint32_t> xs); // drops const-zero terms
    uint32_t mul(uint32_t a, uint32_t b);   // simplifies by const one/zero
    uint32_t mul_chain(const std::vector<uint32_t>& xs);
    uint32_t perm(int rows, int cols, std::vector<uint32_t> entries); // 1-row -> Add
    uint32_t test(uint32_t x, const Num& v);
    uint32_t thr(std::vector<uint32_t> xs, long long lo, long long hi);
    uint32_t modg(std::vector<uint32_t> xs, long long m, long long r);

    bool is_const_zero(uint32_t g) const { return gates[g].k == Gate::K::Const && gates[g].ctag == 1; }
    bool is_const_one(uint32_t g) const { return gates[g].k == Gate::K::Const && gates[g].ctag == 2; }

    const std::vector<InputKey>& input_keys() const { return input_keys_; }
    uint32_t input_gate(const InputKey& key) const; // throws UnknownInput
    bool has_input(const InputKey& key) const { return input_index_.count(key) != 0; }

    // --- evaluation & updates ---
    void evaluate(const std::function<Value(const InputKey&)>& valuation, Semiring s);
    const Value& value(uint32_t g) const { return cache_.at(g); }
    const Value& out_value() const { return cache_.at(output); }
    bool evaluated() const { return !cache_.empty(); }
    Value update_input(const InputKey& key, const Value& v); // returns new output value
    long long last_update_visits() const { return last_visits_; }
    const Semiring& bound_semiring() const { return sem_; }

    // --- measures & debug ---
    void build_fanout();
    const std::vector<std::vector<uint32_t>>& fanout() const { return fanout_; }
    CircuitStats stats(long long reachout_gate_cap = 6000) const;
    std::string dump(const std::function<std::string(int)>& label = {}) const;
    // debug-mode consistency: recompute everything from the cached inputs
    bool check_cache_consistency() const;

  private:
    uint32_t push(Gate g);
    uint32_t intern(Gate g); // structural sharing for non-input gates
    Value compute(uint32_t g) const;
    std::unordered_map<size_t, std::vector<uint32_t>> cons_;
    uint32_t czero_ = UINT32_MAX, cone_ = UINT32_MAX;
    std::vector<InputKey> input_keys_;
    std::unordered_map<InputKey, uint32_t, InputKeyHash> input_index_;
    std::vector<std::vector<uint32_t>> fanout_;
    std::vector<Value> cache_;
    std::vector<long long> ones_; // counting-gate aux: number of `one` inputs
    Semiring sem_;
    long long last_visits_ = 0;
};

// Brute-force rectangular permanent over all injective row->column maps.
Value perm_reference(const std::vector<std::vector<Value>>& m, const Semiring& s);

// Replace every Perm gate according to `strategy`; the result has no Perm
// gates (Generic/Ring: Add/Mul only; Finite adds Test/Thr/Mod gates).
Circuit lower_circuit(const Circuit& c, LowerStrategy strategy, const Semiring& s);

// Single-permanent convenience used by tests: build a circuit for one k x n
// permanent over fresh inputs m_r_c.
Circuit perm_gate_circuit(int rows, int cols);

} // namespace semicirc

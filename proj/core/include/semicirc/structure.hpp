#pragma once

#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "semicirc/semiring.hpp"

namespace semicirc {

using Tuple = std::vector<int>; // dense element ids

struct Signature {
    struct Sym { std::string name; int arity; };
    std::vector<Sym> relations, functions, weights;

    const Sym* find_relation(const std::string& n) const;
    const Sym* find_function(const std::string& n) const;
    const Sym* find_weight(const std::string& n) const;
    void add_relation(const std::string& n, int arity);
    void add_function(const std::string& n, int arity);
    void add_weight(const std::string& n, int arity);
    void check_unique() const;
};

struct Graph {
    int n = 0;
    std::vector<std::vector<int>> adj; // sorted, simple, undirected
    long long edges = 0;

    void add_edge(int u, int v); // dedups lazily; call finish() after bulk adds
    void finish();               // sort + dedup adjacency
    bool has_edge(int u, int v) const;
};

class WeightedStructure {
  public:
    Signature sig;
    Semiring semiring;
    std::vector<std::string> labels; // id -> external label
    std::unordered_map<std::string, int> label_ids;

    int n() const { return (int)labels.size(); }
    int add_element(const std::string& label);
    int element(const std::string& label) const; // throws UnknownSymbol

    // relations
    bool has_tuple(const std::string& rel, const Tuple& t) const;
    const std::vector<Tuple>& tuples(const std::string& rel) const;
    void add_tuple(const std::string& rel, const Tuple& t); // load-time, unchecked vs Gaifman
    // functions (partial)
    std::optional<int> apply_fun(const std::string& fun, const Tuple& args) const;
    void set_fun(const std::string& fun, const Tuple& args, int image);
    // entry table of a function, nullptr when it has none
    const std::unordered_map<Tuple, int, VecHash>* fun_entries(const std::string& fun) const {
        auto it = fun_maps_.find(fun);
        return it == fun_maps_.end() ? nullptr : &it->second;
    }
    // weights
    Value weight(const std::string& w, const Tuple& t) const; // default: configured default
    Value set_weight(const std::string& w, const Tuple& t, const Value& v); // returns previous
    void set_default_one(const std::string& w); // default on relation tuples becomes one
    const std::map<std::pair<std::string, Tuple>, Value>& weight_entries() const { return weights_; }

    // Gaifman-preserving tuple updates (reserved relations immutable).
    void apply_structure_update(bool add, const std::string& rel, const Tuple& t);
    void reserve_relation(const std::string& rel); // mark immutable (E, clique relations)
    bool in_some_relation(const Tuple& t) const;   // any relation of matching arity
    bool is_clique(const Tuple& t) const;          // w.r.t. cached Gaifman graph

    // update subscription: called with (weight symbol, tuple, new value) and
    // with ("", relation-ish key) for relation flips
    using WeightListener = std::function<void(const std::string&, const Tuple&, const Value&)>;
    std::vector<WeightListener>* listeners() { return &listeners_; }

    const Graph& gaifman() const; // cached; invalidated on load-time mutation only

  private:
    std::unordered_map<std::string, std::vector<Tuple>> rel_tuples_;
    std::unordered_map<std::string, std::unordered_set<Tuple, VecHash>> rel_index_;
    std::unordered_map<std::string, std::unordered_map<Tuple, int, VecHash>> fun_maps_;
    std::map<std::pair<std::string, Tuple>, Value> weights_;
    std::unordered_set<std::string> default_one_;
    std::unordered_set<std::string> reserved_;
    std::vector<WeightListener> listeners_;
    mutable std::optional<Graph> gaifman_;
    friend Graph gaifman_graph(const WeightedStructure&);
};

Graph gaifman_graph(const WeightedStructure& s);

// --- flat-file loading (CLI formats) ---------------------------------------
Signature load_schema(const std::string& path);
// data dir: <rel>.tsv per relation/function, weights.tsv for weights,
// elements.tsv (optional) for the domain.
WeightedStructure load_structure(const Signature& sig, const std::string& data_dir,
                                 const Semiring& semiring,
                                 const std::vector<std::string>& default_one = {});

} // namespace semicirc

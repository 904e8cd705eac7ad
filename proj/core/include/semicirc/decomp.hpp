#pragma once

#include <optional>

#include "semicirc/structure.hpp"

namespace semicirc {

// Acyclic bounded-out-degree orientation from the degeneracy order.
// f_i(v) = i-th out-neighbor (1-based, i <= outdeg(v)); index d+1 is reserved
// for the identity (self), so downstream tuple encodings use 1..d for real
// out-neighbors and d+1 for "same vertex".
struct Orientation {
    int d = 0;                          // max out-degree
    std::vector<std::vector<int>> out;  // per-vertex ordered out-neighbors

    int outdeg(int v) const { return (int)out[v].size(); }
    // t in 1..d+1; returns -1 when t names a missing out-neighbor
    int apply(int v, int t) const {
        if (t == d + 1) return v;
        return t <= outdeg(v) ? out[v][t - 1] : -1;
    }
};

Orientation degeneracy_orient(const Graph& g);

// Rooted labelled forest over the vertex set: parent map (roots map to
// themselves), depths, and unary marks (interned strings) per node.
struct LabelledForest {
    int n = 0;
    std::vector<int> parent;
    std::vector<int> depth;
    int max_depth = 0;
    std::vector<std::vector<uint32_t>> marks; // sorted mark ids

    bool has_mark(int v, uint32_t m) const {
        const auto& ms = marks[v];
        return std::binary_search(ms.begin(), ms.end(), m);
    }
    void add_mark(int v, uint32_t m);
    int ancestor(int v, int steps) const { // parent^steps, saturating at roots
        while (steps-- > 0) v = parent[v];
        return v;
    }
    int ancestor_at_depth(int v, int dep) const {
        while (depth[v] > dep) v = parent[v];
        return v;
    }
};

// DFS spanning forest; every graph edge joins an ancestor-descendant pair.
LabelledForest dfs_forest(const Graph& g);

// Exact treedepth via branch-and-bound with memoized vertex subsets.
// Returns an elimination forest of depth <= limit, or nullopt if none.
struct ElimForest {
    std::vector<int> parent; // -1 entries: vertex absent from the graph slice
    int depth = 0;
};
std::optional<ElimForest> treedepth_exact(const Graph& g, int limit,
                                          long long node_budget = 10'000'000);

// Valid (not necessarily optimal) elimination forest: exact search on small
// components, greedy balanced separators on larger ones. Always succeeds.
ElimForest elimination_forest(const Graph& g);

struct LtdColoring {
    int palette = 0;
    std::vector<int> color;
    int p = 0;
    int d = 0; // max certified treedepth over all <=p-subsets
    // certificates per subset (sorted color lists), filled when certified
    std::vector<std::pair<std::vector<int>, ElimForest>> certificates;
};

// Low-treedepth coloring by iterated transitive-fraternal augmentation and
// greedy coloring; optionally certifies every <=p color-subset with an
// elimination forest (escalating the palette on depth-cap failures).
LtdColoring low_treedepth_coloring(const Graph& g, int p, unsigned seed = 1,
                                   bool certify = true, int depth_cap = 12,
                                   int max_retries = 8);

// --- bounded-treedepth encoding (binary structures -> labelled forests) -----

// A purely relational structure with unary marks and named binary relations.
struct BinaryStructure {
    int n = 0;
    std::vector<std::vector<uint32_t>> unary; // sorted mark ids per node
    std::vector<std::pair<std::string, std::vector<std::pair<int, int>>>> binary;

    Graph gaifman() const;
};

// Mark naming scheme for the ancestor encoding of binary relations.
uint32_t mark_id(const std::string& name);
std::string in_mark(const std::string& rel, int depth);  // G(anc_i(b), b)
std::string out_mark(const std::string& rel, int depth); // G(b, anc_i(b))

// DFS forest of the Gaifman graph plus marks recording each binary atom
// against the ancestor at each depth; binary atoms are recoverable from the
// marks (see decode_binary).
LabelledForest encode_bounded_td(const BinaryStructure& s);
// Same encoding over a supplied elimination-forest skeleton (keeps the depth
// within the certified treedepth instead of the DFS depth).
LabelledForest encode_bounded_td(const BinaryStructure& s, const ElimForest& skeleton);

// Round-trip decoder used by tests: reconstructs the pair set of `rel` from
// the forest marks alone.
std::vector<std::pair<int, int>> decode_binary(const LabelledForest& f, const std::string& rel);

} // namespace semicirc

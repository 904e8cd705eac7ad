#pragma once

#include "semicirc/circuit.hpp"
#include "semicirc/decomp.hpp"
#include "semicirc/expr.hpp"
#include "semicirc/shapes.hpp"

namespace semicirc {

// --- sparsity reduction: bounded-arity atoms over a degeneracy orientation ------

// Rewrites every atom and weight of arity >= 2 through the acyclic bounded
// out-degree orientation: arc relations @arc:<t> carry the orientation edges,
// unary relations @u:<R>:<i>:<t̄> and unary weights @w:<w>:<i>:<t̄> record the
// original tuples at their orientation source. The rewritten expression uses
// only unary atoms, arc atoms, and equalities; the Gaifman graph is unchanged.
struct UnifyReduced {
    WeightedStructure s;
    Expr e;
    Orientation orient;
    // unary weight symbol -> (original symbol, out-neighbor index per position)
    std::unordered_map<std::string, std::pair<std::string, std::vector<int>>> weight_map;

    // input key of a unary weight symbol at a vertex, in terms of the original
    // structure's weight table; nullopt when the decoded tuple does not exist
    std::optional<InputKey> key_of(const std::string& sym, int v) const;
};

UnifyReduced unify_reduce(const WeightedStructure& s, const Expr& e);

// --- closed normal form: sum of sum-over-vars blocks -----------------------------

struct Block {
    std::vector<std::string> vars;
    Expr body; // sum-free
};

// Distributes + over * and hoists sums to block heads; requires distinct
// binders (guaranteed by simplify) and a closed expression.
std::vector<Block> normalize_blocks(const Expr& e);

// --- color split -------------------------------------------------------------------

std::string color_rel(int c);

struct ColorPart {
    std::vector<int> colors; // subset D, sorted
    std::vector<int> verts;  // vertices colored within D
    Expr body;               // sum over surjective color vectors of [colors]*psi
};

// Extends s with @color:<c> unary relations and splits a block by the exact
// color set of its variables; the block equals the sum of the part bodies.
std::pair<WeightedStructure, std::vector<ColorPart>> color_split(const WeightedStructure& s,
                                                                 const Block& block,
                                                                 const LtdColoring& coloring);

// --- forest compilation ---------------------------------------------------------------

// Builds, inside an existing circuit, the gate computing the shape-combination
// sum over a labelled forest: one Perm per (shape node, vertex) pair reached
// top-down, zero columns pruned, weight symbols resolved through key_of on the
// structure-level vertex ids.
// When `refine` lists color ids, every shape is additionally compiled once per
// surjective assignment of those colors onto its anchor nodes (each anchor must
// then land on a vertex carrying the matching @color mark): embeddings are
// charged exactly to the part whose color set they use.
uint32_t compile_forest(Circuit& c, const LabelledForest& f, const std::vector<ShapePart>& parts,
                        const std::function<std::optional<InputKey>(const std::string&, int)>& key_of,
                        const std::vector<int>& vertex_ids, const std::vector<int>& refine = {});

// --- end-to-end -----------------------------------------------------------------------

struct CompileOptions {
    int p = 0;           // coloring palette-cover parameter; 0 = auto
    unsigned seed = 1;
    int depth_cap = 12;  // certification depth cap
    // take the whole-graph elimination forest instead of a coloring while
    // (depth+1)^k stays under this budget
    long long single_part_budget = 400;
    bool keep_stages = false;
};

struct CompiledQuery {
    Circuit circuit;
    Expr closed;                          // compiled closed expression
    std::vector<std::string> probe_vars;  // open queries: original free variables
    std::vector<std::string> probe_syms;  // matching probe-weight symbols
    std::vector<std::pair<std::string, std::string>> stages;

    // evaluate against a structure's weight table (probe weights read as zero)
    Value eval_on(const WeightedStructure& s, const Semiring& sr);
    // read the value at a tuple via 2k probe-weight flips; needs eval_on first
    Value probe(const Tuple& a);
};

CompiledQuery compile(const WeightedStructure& s, const Expr& f, const CompileOptions& opt = {});
CompiledQuery compile_open(const WeightedStructure& s, const Expr& f,
                           const CompileOptions& opt = {});

} // namespace semicirc

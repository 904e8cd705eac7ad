#pragma once

#include "semicirc/decomp.hpp"
#include "semicirc/expr.hpp"

namespace semicirc {

// A forest pattern: nodes with exact depths, parent links (roots point to
// themselves), required/forbidden unary marks, and per-variable anchor nodes.
// Every node is an ancestor of some anchored node. Binary relations are
// represented through the @in/@out ancestor marks of encode_bounded_td.
struct Shape {
    int n = 0;
    std::vector<int> parent;
    std::vector<int> depth;
    std::vector<std::vector<uint32_t>> marks;     // required, sorted
    std::vector<std::vector<uint32_t>> neg_marks; // forbidden, sorted
    std::vector<int> anchor;                      // variable index -> node
};

struct LabelledShape {
    Shape shape;
    std::vector<std::vector<std::string>> lambda; // weight-symbol multiset per node
};

// One summand of a basic-expression combination: mult copies of the product
// of the given constants and the shape's weighted embedding sum.
struct ShapePart {
    long long mult = 1;
    std::vector<Num> consts;
    LabelledShape ls;
};

// Decompose a sum-free simple expression (atoms: unary relations = marks,
// binary relations = ancestor marks, equalities; unary weights) over the
// variables `vars` into an exclusive combination of labelled shapes over
// forests of depth <= max_depth. The sum over `vars` of e equals the sum of
// mult * consts * (embedding sum) over the returned parts, on every labelled
// forest of that depth.
std::vector<ShapePart> decompose_basic(const Expr& e, const std::vector<std::string>& vars,
                                       int max_depth);

// Direct reference semantics: sum over all injective depth-preserving
// embeddings of each shape of the product of its weights and constants.
Value shapes_brute_eval(const std::vector<ShapePart>& parts, const LabelledForest& f,
                        const std::function<Value(const std::string&, int)>& weight,
                        const Semiring& sr);

} // namespace semicirc

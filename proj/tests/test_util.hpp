#pragma once

#include <random>

#include "semicirc/expr.hpp"
#include "semicirc/structure.hpp"

namespace semicirc::testutil {

// Signature used by most expression/compiler tests: a binary edge relation,
// a unary mark, a total unary function, and unary/binary weights.
inline Signature test_sig() {
    Signature sig;
    sig.add_relation("E", 2);
    sig.add_relation("U", 1);
    sig.add_function("f", 1);
    sig.add_weight("w", 1);
    sig.add_weight("u", 1);
    sig.add_weight("v", 2);
    return sig;
}

// Random sparse structure over test_sig(): E is a random 2-degenerate digraph,
// f total, weights sampled from the semiring. Binary weights live on E tuples.
inline WeightedStructure random_structure(int n, unsigned seed, const Semiring& sr,
                                          Signature sig = test_sig()) {
    std::mt19937 rng(seed);
    WeightedStructure s;
    s.sig = std::move(sig);
    s.semiring = sr;
    for (int i = 0; i < n; i++) s.add_element("a" + std::to_string(i));
    for (int vtx = 1; vtx < n; vtx++) {
        int picks = (int)(rng() % 3);
        for (int i = 0; i < std::min(vtx, picks); i++) {
            int other = (int)(rng() % vtx);
            if (rng() % 2)
                s.add_tuple("E", {vtx, other});
            else
                s.add_tuple("E", {other, vtx});
        }
    }
    if (rng() % 2) s.add_tuple("E", {0, 0}); // occasional self-loop
    for (int i = 0; i < n; i++)
        if (rng() % 3 == 0) s.add_tuple("U", {i});
    for (int i = 0; i < n; i++) {
        // total function whose graph stays inside the Gaifman edges: identity
        // or an E-neighbor
        std::vector<int> cands{i};
        for (const auto& t : s.tuples("E")) {
            if (t[0] == i) cands.push_back(t[1]);
            if (t[1] == i) cands.push_back(t[0]);
        }
        s.set_fun("f", {i}, cands[rng() % cands.size()]);
    }
    for (int i = 0; i < n; i++) {
        s.set_weight("w", {i}, sr->sample(rng));
        s.set_weight("u", {i}, sr->sample(rng));
    }
    for (const auto& t : s.tuples("E")) s.set_weight("v", t, sr->sample(rng));
    return s;
}

} // namespace semicirc::testutil

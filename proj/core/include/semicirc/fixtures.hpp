#pragma once

#include "semicirc/structure.hpp"

namespace semicirc {

// Signature shared by all generated fixtures: V(1), E(2), weights w(1), v(2).
Signature fixture_signature();

// Reproducible random structure of a bounded-expansion family:
//   bounded-degree  max degree 3
//   2-degenerate    every vertex has at most 2 back-edges
//   forest          parent edges, some roots
//   grid            ⌊√n⌋ x ⌊√n⌋ mesh
// Unary weights on every element, binary weights on every edge tuple.
WeightedStructure fixture_structure(const std::string& kind, int n, unsigned seed,
                                    const Semiring& sr);

// Writes a structure as the flat-file data dir understood by load_structure.
void write_fixture(const WeightedStructure& s, const std::string& dir);

// fixture_structure + write_fixture over the nat semiring.
void generate_fixture(const std::string& kind, int n, unsigned seed, const std::string& dir);

} // namespace semicirc

#pragma once

#include <functional>
#include <memory>
#include <random>

#include "semicirc/value.hpp"

namespace semicirc {

// A registered commutative semiring. Immutable after registration; shared freely.
struct SemiringHandle {
    enum class Kind { Generic, Ring, Finite, Free };

    std::string name;
    Kind kind = Kind::Generic;
    std::function<Value(const Value&, const Value&)> add_fn, mul_fn;
    std::function<Value(const Value&)> neg_fn; // rings only
    Value zero, one;
    std::vector<Value> universe;           // finite only
    std::vector<long long> cyclic_orders;  // finite only: orders of cyclic subgroups of (S,+)
    std::function<Value(std::mt19937&)> sample;

    Value add(const Value& a, const Value& b) const { return add_fn(a, b); }
    Value mul(const Value& a, const Value& b) const { return mul_fn(a, b); }
    Value neg(const Value& a) const {
        if (!neg_fn) fail("NotARing", name + " has no additive inverses");
        return neg_fn(a);
    }
    bool eq(const Value& a, const Value& b) const;
    bool is_zero(const Value& a) const { return eq(a, zero); }
    Value iverson(bool flag) const { return flag ? one : zero; }

    // Integer-scalar action m*s (repeated addition), used by lowerings.
    Value times_int(long long m, const Value& s) const;
    // Constant embedding from a parsed query constant; may fail.
    Value from_num(const Num& c) const;
    std::string str(const Value& v) const { return value_str(v); }
    Value parse(const std::string& text) const; // CLI value syntax
};

using Semiring = std::shared_ptr<const SemiringHandle>;

// Build a semiring from a CLI token: bool, nat, int, minplus, maxplus,
// zmod:<k>, rat, free. Runs the randomized axiom battery; throws
// SemiringError with the violated axiom + witnesses on failure.
Semiring make_semiring(const std::string& token);

// The axiom battery, exposed for tests (200 triples, fixed seed).
void check_semiring_axioms(const SemiringHandle& s);

// Homomorphism h : F_A -> B, zero -> false, nonzero monomial sums -> true.
bool free_to_bool(const Value& v);

} // namespace semicirc

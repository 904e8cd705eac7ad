#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "semicirc/common.hpp"

namespace semicirc {

// ---------------------------------------------------------------------------
// Num: exact rational with +/- infinity, 64-bit components, overflow-checked.
// One numeric carrier serves bool/nat/int/zmod/minplus/maxplus/rat elements.
// ---------------------------------------------------------------------------
struct Num {
    enum class K : uint8_t { Fin, PInf, NInf };
    K k = K::Fin;
    long long n = 0;
    long long d = 1; // > 0, gcd(n,d) = 1 when finite

    static Num of(long long v) { return Num{K::Fin, v, 1}; }
    static Num rat(long long num, long long den);
    static Num pinf() { return Num{K::PInf, 0, 1}; }
    static Num ninf() { return Num{K::NInf, 0, 1}; }

    bool finite() const { return k == K::Fin; }
    bool is_int() const { return k == K::Fin && d == 1; }
    bool operator==(const Num& o) const { return k == o.k && (k != K::Fin || (n == o.n && d == o.d)); }
    bool operator!=(const Num& o) const { return !(*this == o); }
};

Num num_add(const Num& a, const Num& b);
Num num_sub(const Num& a, const Num& b);
Num num_mul(const Num& a, const Num& b);
Num num_div(const Num& a, const Num& b); // b finite nonzero
int num_cmp(const Num& a, const Num& b); // -1,0,1
std::string num_str(const Num& a);
Num num_parse(const std::string& s); // "3", "-7/2", "inf", "-inf"

// ---------------------------------------------------------------------------
// Identifiers and monomials of the free semiring. Identifiers are interned
// strings; a monomial is a sorted multiset of identifier ids.
// ---------------------------------------------------------------------------
class IdentPool {
  public:
    static IdentPool& instance();
    uint32_t intern(const std::string& name);
    const std::string& name(uint32_t id) const { return names_.at(id); }

  private:
    std::vector<std::string> names_;
};

using Monomial = std::vector<uint32_t>; // sorted ascending, repeats allowed

Monomial mono_union(const Monomial& a, const Monomial& b);
std::string mono_str(const Monomial& m); // "e_ab*e_bc", empty monomial -> "1"

// ---------------------------------------------------------------------------
// Free-semiring elements: lazy lists of monomials. Addition is concatenation,
// multiplication is the lexicographic (left-major) product. `len` is eager so
// position arithmetic is O(1) per node.
// ---------------------------------------------------------------------------
struct FreeNode;
using FreeElem = std::shared_ptr<const FreeNode>;

struct FreeNode {
    enum class K : uint8_t { Leaf, Cat, Prod };
    K k;
    Monomial mono;               // Leaf
    std::vector<FreeElem> parts; // Cat
    FreeElem a, b;               // Prod
    unsigned long long len = 0;
};

FreeElem free_zero();
FreeElem free_one();
FreeElem free_leaf(Monomial m);
FreeElem free_ident(const std::string& name);
FreeElem free_cat(std::vector<FreeElem> parts);
FreeElem free_add(const FreeElem& a, const FreeElem& b);
FreeElem free_mul(const FreeElem& a, const FreeElem& b);
FreeElem free_repeat_one(unsigned long long m); // m * 1 (m empty monomials)

// Full materialization (throws BudgetExceeded past `cap` monomials).
std::vector<Monomial> free_materialize(const FreeElem& e, size_t cap = 4u << 20);
// Canonical (sorted) monomial multiset, for equality tests.
std::vector<Monomial> free_canonical(const FreeElem& e, size_t cap = 4u << 20);
bool free_equal(const FreeElem& a, const FreeElem& b);
std::string free_str(const FreeElem& e, size_t limit = 64);

// ---------------------------------------------------------------------------
// A value of some semiring: either a number or a free-semiring element.
// ---------------------------------------------------------------------------
struct Value {
    std::variant<Num, FreeElem> v;
    Value() : v(Num::of(0)) {}
    Value(Num x) : v(x) {}
    Value(FreeElem e) : v(std::move(e)) {}
    bool is_free() const { return std::holds_alternative<FreeElem>(v); }
    const Num& num() const {
        if (is_free()) fail("TypeMismatch", "expected numeric value");
        return std::get<Num>(v);
    }
    const FreeElem& fe() const {
        if (!is_free()) fail("TypeMismatch", "expected free-semiring value");
        return std::get<FreeElem>(v);
    }
};

std::string value_str(const Value& v);

} // namespace semicirc

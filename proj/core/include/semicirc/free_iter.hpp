#pragma once

#include <memory>
#include <vector>

#include "semicirc/value.hpp"

namespace semicirc {

// Bi-directional constant-access iterator over a multiset of monomials.
// Positions run 1..len with arithmetic modulo len; position 0 (empty list
// only) yields the bottom marker (nullptr from current()).
class BiIterator {
  public:
    // Pluggable cursor backend over a fixed-length monomial list. Every
    // method except length() may assume the list is nonempty; next/prev
    // report a wrap-around (the cursor then sits at the first/last item).
    struct Impl {
        virtual ~Impl() = default;
        virtual std::unique_ptr<Impl> clone() const = 0;
        virtual unsigned long long length() const = 0;
        virtual void first(long long& ops) = 0;
        virtual void last(long long& ops) = 0;
        virtual bool next(long long& ops) = 0;
        virtual bool prev(long long& ops) = 0;
        virtual void collect(Monomial& out, long long& ops) const = 0;
        virtual int budget() const = 0; // nominal per-call operation bound
    };

    BiIterator() : BiIterator(free_zero()) {}
    explicit BiIterator(FreeElem root);
    explicit BiIterator(std::unique_ptr<Impl> impl);
    BiIterator(const BiIterator& o);
    BiIterator& operator=(const BiIterator& o);
    BiIterator(BiIterator&&) noexcept = default;
    BiIterator& operator=(BiIterator&&) noexcept = default;
    ~BiIterator();

    unsigned long long length() const;
    unsigned long long position() const { return pos_; }
    // nullptr at position 0; otherwise the monomial at the current position.
    const Monomial* current();
    void next();
    void previous();

    // the lazy-list root for free-semiring-backed iterators (zero otherwise)
    const FreeElem& root() const { return root_; }
    bool free_backed() const { return free_backed_; }
    std::unique_ptr<Impl> clone_impl() const;

    long long ops() const { return ops_; } // instrumentation: node visits
    void reset_ops() { ops_ = 0; }
    int access_time_budget = 0; // nominal per-call bound, set by constructors

  private:
    FreeElem root_;
    bool free_backed_ = true;
    std::unique_ptr<Impl> impl_;
    unsigned long long pos_ = 0;
    mutable Monomial scratch_;
    long long ops_ = 0;
};

// Concatenation / lexicographic-product iterator constructors. Free-backed
// operands combine at the lazy-list level; mixed operands get generic
// cursor-composition backends with the same ordering.
BiIterator iter_concat(const std::vector<BiIterator>& parts);
BiIterator iter_product(const BiIterator& a, const BiIterator& b);

} // namespace semicirc

#pragma once

#include <functional>
#include <optional>
#include <unordered_map>

#include "semicirc/compiler.hpp"
#include "semicirc/free_iter.hpp"

namespace semicirc {

// Boolean rows x columns matrix indexed by column classes (the bit vector of
// a column's rows). Columns of one class sit on a doubly-linked list, so a
// single-entry change relinks one column in O(1); feasibility questions only
// read the per-class counts saturated at the row count.
class ColumnClassIndex {
  public:
    ColumnClassIndex(int rows, int cols); // all-zero matrix

    int rows() const { return r_; }
    int cols() const { return c_; }
    bool get(int row, int col) const { return (mask_[col] >> row) & 1u; }
    void set(int row, int col, bool v);
    uint32_t col_mask(int col) const { return mask_[col]; }
    int saturated_count(uint32_t mask) const { return std::min(count_[mask], r_); }

    // is there an injective assignment of `rowset` rows to distinct columns
    // (entry 1 required), with the `used` columns excluded?
    bool feasible(uint32_t rowset, const std::vector<int>& used) const;

    // a column is good when picking it for the pinned row 0 still leaves the
    // remaining rows assignable: N[0,c] = 1 and the residual matrix nonzero
    bool column_good(int col) const;
    std::vector<int> good_columns() const; // class order, list order within
    BiIterator good_column_iter() const;   // monomial {"#<col>"} per good column

    // class-list navigation (column ids; -1 beyond the ends)
    int list_head(uint32_t mask) const { return head_[mask]; }
    int list_tail(uint32_t mask) const { return tail_[mask]; }
    int list_next(int col) const { return next_[col]; }
    int list_prev(int col) const { return prev_[col]; }

  private:
    void unlink(int col);
    void link(int col); // appends to its class list

    int r_ = 0, c_ = 0;
    std::vector<uint32_t> mask_;
    std::vector<int> next_, prev_;
    std::vector<int> head_, tail_, count_; // per class mask
};

// Lazy bi-directional enumerator of the permanent's monomials: row 0 is
// pinned, its feasible columns are walked through the class index, and each
// pick recurses on the matrix without that row and column. Skipped columns
// never cost more than a class-table scan, so access time depends on the row
// count only. Rows beyond 12 are rejected.
BiIterator perm_enumerator(const std::vector<std::vector<BiIterator>>& m);

// Per-gate enumerator construction: inputs take the valuation's iterator,
// additions concatenate, multiplications take lexicographic products and
// permanent gates use perm_enumerator; the output gate's iterator is
// returned. Counting gates (Test/Thr/Mod) are rejected.
BiIterator circuit_enumerator(const Circuit& c,
                              const std::function<BiIterator(const InputKey&)>& valuation);

// Answer enumeration for a quantifier-free formula. Relation atoms are
// re-encoded as 0/1 weights over an immutable adjacency closure, so tuple
// updates become constantly many weight flips; answers are decoded from
// position-tagging monomials, one monomial per satisfying assignment.
class EnumSession {
  public:
    EnumSession(const WeightedStructure& s, const Formula& phi, std::vector<std::string> vars,
                const CompileOptions& opt = {});

    int arity() const { return (int)vars_.size(); }
    const std::vector<std::string>& vars() const { return vars_; }

    BiIterator& iterator();       // rebuilt on demand after updates
    std::vector<Tuple> answers(); // one full sweep, decoded
    Tuple decode(const Monomial& m) const;
    bool any_answer() const; // boolean mirror of the circuit output

    // Gaifman-preserving tuple flip; the circuit sees O(1) weight updates
    void apply(bool add, const std::string& rel, const Tuple& t);
    long long last_update_visits() const { return visits_; }

    const Circuit& circuit() const { return cq_.circuit; }
    const WeightedStructure& structure() const { return s_; }

  private:
    BiIterator build_iterator() const;

    WeightedStructure s_; // relational copy, free semiring, encoding weights
    std::vector<std::string> vars_;
    CompiledQuery cq_;
    Semiring boolsr_;
    std::unordered_map<uint32_t, std::pair<int, int>> tags_; // ident -> (pos, element)
    std::set<std::string> encoded_;                          // relations with +/- weights
    std::optional<BiIterator> it_;
    bool dirty_ = true;
    long long visits_ = 0;
};

inline void session_update(EnumSession& s, bool add, const std::string& rel, const Tuple& t) {
    s.apply(add, rel, t);
}

EnumSession enumerate_answers(const WeightedStructure& s, const Formula& phi,
                              std::vector<std::string> vars, const CompileOptions& opt = {});

} // namespace semicirc

#include "semicirc/enumerate.hpp"

#include <algorithm>
#include <functional>

namespace semicirc {

// --- ColumnClassIndex ---------------------------------------------------------

ColumnClassIndex::ColumnClassIndex(int rows, int cols) : r_(rows), c_(cols) {
    if (rows < 1 || rows > 12) fail("BudgetExceeded", "class index supports 1..12 rows");
    mask_.assign(c_, 0);
    next_.assign(c_, -1);
    prev_.assign(c_, -1);
    head_.assign(1u << r_, -1);
    tail_.assign(1u << r_, -1);
    count_.assign(1u << r_, 0);
    for (int c = 0; c < c_; c++) link(c);
}

void ColumnClassIndex::unlink(int col) {
    uint32_t m = mask_[col];
    int p = prev_[col], n = next_[col];
    (p >= 0 ? next_[p] : head_[m]) = n;
    (n >= 0 ? prev_[n] : tail_[m]) = p;
    count_[m]--;
}

void ColumnClassIndex::link(int col) {
    uint32_t m = mask_[col];
    prev_[col] = tail_[m];
    next_[col] = -1;
    (tail_[m] >= 0 ? next_[tail_[m]] : head_[m]) = col;
    tail_[m] = col;
    count_[m]++;
}

void ColumnClassIndex::set(int row, int col, bool v) {
    if (get(row, col) == v) return;
    unlink(col);
    mask_[col] ^= 1u << row;
    link(col);
}

bool ColumnClassIndex::feasible(uint32_t rowset, const std::vector<int>& used) const {
    if (!rowset) return true;
    std::vector<int> cnt(count_.size());
    for (size_t m = 0; m < cnt.size(); m++) cnt[m] = count_[m];
    for (int u : used) cnt[mask_[u]]--;
    for (size_t m = 0; m < cnt.size(); m++) cnt[m] = std::min(cnt[m], r_);
    // Hall's condition: every row subset has enough compatible columns
    for (uint32_t S = rowset;; S = (S - 1) & rowset) {
        if (S) {
            int need = __builtin_popcount(S), have = 0;
            for (uint32_t m = 1; m < cnt.size() && have < need; m++)
                if (m & S) have += cnt[m];
            if (have < need) return false;
        }
        if (!S) break;
    }
    return true;
}

bool ColumnClassIndex::column_good(int col) const {
    if (!get(0, col)) return false;
    if (r_ == 1) return true;
    return feasible(((1u << r_) - 1u) & ~1u, {col});
}

std::vector<int> ColumnClassIndex::good_columns() const {
    std::vector<int> out;
    uint32_t rest = ((1u << r_) - 1u) & ~1u;
    for (uint32_t m = 1; m < (uint32_t)(1 << r_); m++) {
        if (!(m & 1u) || count_[m] == 0) continue;
        if (r_ > 1 && !feasible(rest, {head_[m]})) continue; // class-level test
        for (int c = head_[m]; c >= 0; c = next_[c]) out.push_back(c);
    }
    return out;
}

BiIterator ColumnClassIndex::good_column_iter() const {
    std::vector<FreeElem> parts;
    for (int c : good_columns())
        parts.push_back(free_ident("#" + std::to_string(c)));
    return BiIterator(free_cat(std::move(parts)));
}

// --- permanent enumeration ----------------------------------------------------

namespace {

unsigned long long checked_mul(unsigned long long x, unsigned long long y) {
    if (x == 0 || y == 0) return 0;
    unsigned long long r = x * y;
    if (r / y != x) fail("BudgetExceeded", "monomial count overflow");
    return r;
}

unsigned long long checked_add(unsigned long long x, unsigned long long y) {
    unsigned long long r = x + y;
    if (r < x) fail("BudgetExceeded", "monomial count overflow");
    return r;
}

struct PermImpl final : BiIterator::Impl {
    int k, C;
    std::vector<std::unique_ptr<Impl>> ent;  // k x C, row-major
    std::vector<unsigned long long> elen;    // entry lengths
    ColumnClassIndex idx;
    std::vector<int> col; // chosen column per level
    unsigned long long len = 0;

    PermImpl(int rows, int cols) : k(rows), C(cols), idx(rows, cols), col(rows, -1) {}

    std::unique_ptr<Impl> clone() const override {
        auto c = std::make_unique<PermImpl>(k, C);
        for (const auto& e : ent) c->ent.push_back(e->clone());
        c->elen = elen;
        c->idx = idx;
        c->col = col;
        c->len = len;
        return c;
    }
    unsigned long long length() const override { return len; }

    Impl* entry(int i) const { return ent[(size_t)i * C + col[i]].get(); }
    uint32_t rows_below(int i) const { return ((1u << k) - 1u) & ~((1u << i) - 1u); }

    bool used_before(int level, int c) const {
        for (int j = 0; j < level; j++)
            if (col[j] == c) return true;
        return false;
    }
    // class-level goodness: picking an unused column of class m at `level`
    // leaves the deeper rows assignable
    bool class_ok(int level, int cand) const {
        std::vector<int> used(col.begin(), col.begin() + level);
        used.push_back(cand);
        return idx.feasible(rows_below(level + 1), used);
    }
    int scan_class(uint32_t m, int level, bool fwd) const {
        if (!((m >> level) & 1u) || idx.saturated_count(m) == 0) return -1;
        int c = fwd ? idx.list_head(m) : idx.list_tail(m);
        while (c >= 0 && used_before(level, c)) c = fwd ? idx.list_next(c) : idx.list_prev(c);
        if (c < 0 || !class_ok(level, c)) return -1;
        return c;
    }
    int edge_col(int level, bool fwd) const { // first (fwd) or last column
        for (uint32_t s = 0; s < (1u << k); s++) {
            uint32_t m = fwd ? s : (1u << k) - 1u - s;
            int c = scan_class(m, level, fwd);
            if (c >= 0) return c;
        }
        return -1;
    }
    int step_col(int level, int cur, bool fwd) const {
        int c = fwd ? idx.list_next(cur) : idx.list_prev(cur);
        while (c >= 0 && used_before(level, c)) c = fwd ? idx.list_next(c) : idx.list_prev(c);
        if (c >= 0) return c; // same class, goodness unchanged
        uint32_t m0 = idx.col_mask(cur);
        for (uint32_t m = fwd ? m0 + 1 : m0 - 1; m < (1u << k); fwd ? m++ : m--) {
            c = scan_class(m, level, fwd);
            if (c >= 0) return c;
        }
        return -1;
    }
    void rebuild(int from, bool fwd, long long& ops) {
        for (int j = from; j < k; j++) {
            ops++;
            col[j] = edge_col(j, fwd);
            fwd ? entry(j)->first(ops) : entry(j)->last(ops);
        }
    }
    void first(long long& ops) override { rebuild(0, true, ops); }
    void last(long long& ops) override { rebuild(0, false, ops); }

    bool step(int i, bool fwd, long long& ops) {
        ops++;
        if (i == k) return true;
        if (!step(i + 1, fwd, ops)) return false;
        if (!(fwd ? entry(i)->next(ops) : entry(i)->prev(ops))) return false;
        int nc = step_col(i, col[i], fwd);
        bool wrapped = nc < 0;
        col[i] = wrapped ? edge_col(i, fwd) : nc;
        fwd ? entry(i)->first(ops) : entry(i)->last(ops);
        rebuild(i + 1, fwd, ops);
        return wrapped;
    }
    bool next(long long& ops) override { return step(0, true, ops); }
    bool prev(long long& ops) override { return step(0, false, ops); }

    void collect(Monomial& out, long long& ops) const override {
        for (int i = 0; i < k; i++) entry(i)->collect(out, ops);
    }
    int budget() const override {
        int b = 1;
        for (const auto& e : ent) b = std::max(b, e->budget());
        return k * (b + (1 << k) * (k + 2) + 4) + 4;
    }
    void finish() { // lengths, classes, and the monomial count
        for (int i = 0; i < k; i++)
            for (int c = 0; c < C; c++)
                if (elen[(size_t)i * C + c]) idx.set(i, c, true);
        std::vector<unsigned long long> f(1u << k, 0);
        f[0] = 1;
        for (int c = 0; c < C; c++)
            for (uint32_t S = (1u << k) - 1u; S; S--)
                for (int i = 0; i < k; i++)
                    if ((S >> i) & 1u)
                        f[S] = checked_add(f[S],
                                           checked_mul(f[S ^ (1u << i)], elen[(size_t)i * C + c]));
        len = f[(1u << k) - 1u];
    }
};

} // namespace

BiIterator perm_enumerator(const std::vector<std::vector<BiIterator>>& m) {
    int rows = (int)m.size();
    if (rows == 0) return BiIterator(free_one());
    int cols = (int)m[0].size();
    auto p = std::make_unique<PermImpl>(rows, cols);
    for (int i = 0; i < rows; i++) {
        if ((int)m[i].size() != cols) fail("ArityMismatch", "ragged permanent matrix");
        for (int c = 0; c < cols; c++) {
            p->ent.push_back(m[i][c].clone_impl());
            p->elen.push_back(m[i][c].length());
        }
    }
    p->finish();
    return BiIterator(std::move(p));
}

// --- per-gate enumerators -------------------------------------------------------

BiIterator circuit_enumerator(const Circuit& c,
                              const std::function<BiIterator(const InputKey&)>& valuation) {
    std::unordered_map<uint32_t, const InputKey*> key_of;
    for (const auto& k : c.input_keys()) key_of[c.input_gate(k)] = &k;
    auto fr = make_semiring("free");
    std::vector<BiIterator> its;
    its.reserve(c.gates.size());
    for (uint32_t g = 0; g < c.gates.size(); g++) {
        const Gate& gt = c.gates[g];
        switch (gt.k) {
            case Gate::K::Input: its.push_back(valuation(*key_of.at(g))); break;
            case Gate::K::Const: {
                FreeElem v = gt.ctag == 1   ? free_zero()
                             : gt.ctag == 2 ? free_one()
                                            : fr->from_num(gt.cnum).fe();
                its.push_back(BiIterator(std::move(v)));
                break;
            }
            case Gate::K::Add: {
                std::vector<BiIterator> kids;
                kids.reserve(gt.in.size());
                for (uint32_t x : gt.in) kids.push_back(its[x]);
                its.push_back(iter_concat(kids));
                break;
            }
            case Gate::K::Mul: {
                BiIterator acc = its[gt.in[0]];
                for (size_t j = 1; j < gt.in.size(); j++) acc = iter_product(acc, its[gt.in[j]]);
                its.push_back(std::move(acc));
                break;
            }
            case Gate::K::Perm: {
                std::vector<std::vector<BiIterator>> mat(gt.rows);
                for (int r = 0; r < gt.rows; r++)
                    for (int cc = 0; cc < gt.cols; cc++)
                        mat[r].push_back(its[gt.in[(size_t)r * gt.cols + cc]]);
                its.push_back(perm_enumerator(mat));
                break;
            }
            default:
                fail("TypeMismatch", "enumeration supports Add/Mul/Perm/Const/Input gates only");
        }
    }
    return its[c.output];
}

// --- answer sessions ------------------------------------------------------------

namespace {

const char* kAdj = "@adj";

std::string vplus(const std::string& rel) { return "@v+:" + rel; }
std::string vminus(const std::string& rel) { return "@v-:" + rel; }

void collect_rel_syms(const Formula& f, std::set<std::string>& out) {
    if (f->k == FormulaNode::K::Rel) out.insert(f->rel);
    for (const auto& k : f->kids) collect_rel_syms(k, out);
}

// 0/1-valued expression over the +/- membership weights; negation is pushed
// to the atoms and disjunctions expand exclusively, so every satisfying
// assignment is produced with multiplicity exactly one
Expr encode01(const Formula& f, bool neg) {
    auto or_terms = [&](const std::vector<Formula>& kids, bool inner_neg) {
        std::vector<Expr> terms;
        for (size_t i = 0; i < kids.size(); i++) {
            std::vector<Expr> fac;
            for (size_t j = 0; j < i; j++) fac.push_back(encode01(kids[j], !inner_neg));
            fac.push_back(encode01(kids[i], inner_neg));
            terms.push_back(e_mul(std::move(fac)));
        }
        return e_add(std::move(terms));
    };
    switch (f->k) {
        case FormulaNode::K::True: return e_bracket(neg ? f_false() : f_true());
        case FormulaNode::K::False: return e_bracket(neg ? f_true() : f_false());
        case FormulaNode::K::Not: return encode01(f->kids[0], !neg);
        case FormulaNode::K::And: {
            if (neg) return or_terms(f->kids, true);
            std::vector<Expr> fac;
            for (const auto& k : f->kids) fac.push_back(encode01(k, false));
            return e_mul(std::move(fac));
        }
        case FormulaNode::K::Or: {
            if (!neg) return or_terms(f->kids, false);
            std::vector<Expr> fac;
            for (const auto& k : f->kids) fac.push_back(encode01(k, true));
            return e_mul(std::move(fac));
        }
        case FormulaNode::K::Eq: {
            Formula eq = f_eq(f->args[0], f->args[1]);
            return e_bracket(neg ? f_not(std::move(eq)) : std::move(eq));
        }
        case FormulaNode::K::Rel: {
            if (f->args.size() == 1)
                return e_weight(neg ? vminus(f->rel) : vplus(f->rel), f->args);
            Formula adj = f_rel(kAdj, f->args);
            if (!neg) return e_mul({e_bracket(adj), e_weight(vplus(f->rel), f->args)});
            return e_add({e_bracket(f_not(adj)),
                          e_mul({e_bracket(adj), e_weight(vminus(f->rel), f->args)})});
        }
    }
    fail("SyntaxError", "unknown formula node");
}

} // namespace

EnumSession::EnumSession(const WeightedStructure& s, const Formula& phi,
                         std::vector<std::string> vars, const CompileOptions& opt)
    : vars_(std::move(vars)), boolsr_(make_semiring("bool")) {
    if (vars_.empty()) fail("SyntaxError", "enumeration needs at least one variable");

    // relational copy under the free semiring; the original weights play no
    // role in which tuples satisfy the formula
    s_.sig = s.sig;
    s_.semiring = make_semiring("free");
    for (const auto& l : s.labels) s_.add_element(l);
    for (const auto& r : s.sig.relations)
        for (const auto& t : s.tuples(r.name)) s_.add_tuple(r.name, t);
    for (const auto& fn : s.sig.functions)
        if (const auto* fm = s.fun_entries(fn.name))
            for (const auto& [args, img] : *fm) s_.set_fun(fn.name, args, img);

    // immutable adjacency closure: every Gaifman edge both ways plus loops
    Graph g = gaifman_graph(s_);
    s_.sig.add_relation(kAdj, 2);
    std::vector<Tuple> adj;
    for (int u = 0; u < g.n; u++)
        for (int v : g.adj[u]) adj.push_back({u, v});
    for (int a = 0; a < s_.n(); a++) adj.push_back({a, a});
    for (const auto& t : adj) s_.add_tuple(kAdj, t);
    s_.reserve_relation(kAdj);

    // membership weights: exactly one of the pair is 1 per candidate tuple
    std::set<std::string> rels;
    collect_rel_syms(phi, rels);
    Value one{free_one()};
    for (const auto& rn : rels) {
        const auto* sym = s_.sig.find_relation(rn);
        if (!sym) fail("UnknownSymbol", "unknown relation " + rn);
        if (sym->arity > 2) fail("SyntaxError", "atom arity beyond 2 in enumeration");
        encoded_.insert(rn);
        s_.sig.add_weight(vplus(rn), sym->arity);
        s_.sig.add_weight(vminus(rn), sym->arity);
        if (sym->arity == 1) {
            for (int a = 0; a < s_.n(); a++)
                s_.set_weight(s_.has_tuple(rn, {a}) ? vplus(rn) : vminus(rn), {a}, one);
        } else {
            for (const auto& t : adj)
                s_.set_weight(s_.has_tuple(rn, t) ? vplus(rn) : vminus(rn), t, one);
        }
    }

    // position tags: answers decode from one ident per variable slot
    for (size_t i = 0; i < vars_.size(); i++) {
        std::string w = "@ans:" + std::to_string(i);
        s_.sig.add_weight(w, 1);
        for (int a = 0; a < s_.n(); a++) {
            std::string nm = "@t:" + std::to_string(i) + ":" + std::to_string(a);
            tags_[IdentPool::instance().intern(nm)] = {(int)i, a};
            s_.set_weight(w, {a}, Value(free_ident(nm)));
        }
    }

    std::vector<Expr> fac{encode01(phi, false)};
    for (size_t i = 0; i < vars_.size(); i++)
        fac.push_back(e_weight("@ans:" + std::to_string(i), {term_var(vars_[i])}));
    Expr f = e_mul(std::move(fac));
    for (auto it = vars_.rbegin(); it != vars_.rend(); ++it) f = e_sum(*it, f);
    cq_ = compile(s_, f, opt);

    // boolean mirror of the same circuit: nonzero-ness per gate, kept
    // current by update_input so updates touch constantly many gates
    cq_.circuit.evaluate(
        [&](const InputKey& k) {
            return boolsr_->iverson(free_to_bool(s_.weight(k.sym, k.tuple)));
        },
        boolsr_);
}

BiIterator EnumSession::build_iterator() const {
    return circuit_enumerator(cq_.circuit, [this](const InputKey& k) {
        return BiIterator(s_.weight(k.sym, k.tuple).fe());
    });
}

BiIterator& EnumSession::iterator() {
    if (dirty_ || !it_) {
        it_ = build_iterator();
        dirty_ = false;
    }
    return *it_;
}

Tuple EnumSession::decode(const Monomial& m) const {
    Tuple t(vars_.size(), -1);
    if (m.size() != vars_.size())
        fail("TypeMismatch", "monomial does not tag every variable slot");
    for (uint32_t id : m) {
        auto it = tags_.find(id);
        if (it == tags_.end()) fail("TypeMismatch", "foreign identifier in answer monomial");
        auto [pos, elem] = it->second;
        if (t[pos] != -1) fail("TypeMismatch", "duplicate variable slot in answer monomial");
        t[pos] = elem;
    }
    return t;
}

std::vector<Tuple> EnumSession::answers() {
    BiIterator it = build_iterator();
    std::vector<Tuple> out;
    out.reserve(it.length());
    for (unsigned long long i = 0; i < it.length(); i++) {
        out.push_back(decode(*it.current()));
        it.next();
    }
    return out;
}

bool EnumSession::any_answer() const { return !boolsr_->is_zero(cq_.circuit.out_value()); }

void EnumSession::apply(bool add, const std::string& rel, const Tuple& t) {
    s_.apply_structure_update(add, rel, t);
    visits_ = 0;
    if (encoded_.count(rel)) {
        Value one{free_one()}, zero{free_zero()};
        s_.set_weight(vplus(rel), t, add ? one : zero);
        s_.set_weight(vminus(rel), t, add ? zero : one);
        const std::pair<std::string, bool> flips[2] = {{vplus(rel), add}, {vminus(rel), !add}};
        for (const auto& [sym, on] : flips) {
            InputKey k{sym, t};
            if (cq_.circuit.has_input(k)) {
                cq_.circuit.update_input(k, boolsr_->iverson(on));
                visits_ += cq_.circuit.last_update_visits();
            }
        }
    }
    dirty_ = true;
}

EnumSession enumerate_answers(const WeightedStructure& s, const Formula& phi,
                              std::vector<std::string> vars, const CompileOptions& opt) {
    return EnumSession(s, phi, std::move(vars), opt);
}

} // namespace semicirc

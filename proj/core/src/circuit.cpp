#include "semicirc/circuit.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <numeric>
#include <sstream>

namespace semicirc {

// --- construction ------------------------------------------------------------

uint32_t Circuit::push(Gate g) {
    uint32_t id = (uint32_t)gates.size();
    for (uint32_t x : g.in)
        if (x >= id) fail("CircuitOrder", "gate input must precede the gate");
    gates.push_back(std::move(g));
    fanout_.clear(); // invalidated
    return id;
}

uint32_t Circuit::intern(Gate g) {
    size_t h = hash_mix((size_t)g.k, (size_t)g.ctag);
    h = hash_mix(h, ((size_t)g.rows << 16) ^ g.cols);
    h = hash_mix(h, (size_t)g.p1);
    h = hash_mix(h, (size_t)g.p2);
    for (uint32_t x : g.in) h = hash_mix(h, (size_t)x);
    if (g.ctag == 0 && (g.k == Gate::K::Const || g.k == Gate::K::Test))
        h = hash_mix(h, std::hash<std::string>{}(num_str(g.cnum)));
    for (uint32_t id : cons_[h]) {
        const Gate& o = gates[id];
        if (o.k == g.k && o.ctag == g.ctag && o.rows == g.rows && o.cols == g.cols &&
            o.p1 == g.p1 && o.p2 == g.p2 && o.in == g.in && num_cmp(o.cnum, g.cnum) == 0)
            return id;
    }
    uint32_t id = push(std::move(g));
    cons_[h].push_back(id);
    return id;
}

uint32_t Circuit::input(const InputKey& key) {
    auto it = input_index_.find(key);
    if (it != input_index_.end()) return it->second;
    Gate g;
    g.k = Gate::K::Input;
    uint32_t id = push(std::move(g));
    input_index_.emplace(key, id);
    input_keys_.push_back(key);
    return id;
}

uint32_t Circuit::input_gate(const InputKey& key) const {
    auto it = input_index_.find(key);
    if (it == input_index_.end()) fail("UnknownInput", "no input gate for " + key.sym);
    return it->second;
}

uint32_t Circuit::constant(const Num& v) {
    Gate g;
    g.k = Gate::K::Const;
    g.ctag = 0;
    g.cnum = v;
    return intern(std::move(g));
}

uint32_t Circuit::const_zero() {
    if (czero_ != UINT32_MAX) return czero_;
    Gate g;
    g.k = Gate::K::Const;
    g.ctag = 1;
    return czero_ = intern(std::move(g));
}

uint32_t Circuit::const_one() {
    if (cone_ != UINT32_MAX) return cone_;
    Gate g;
    g.k = Gate::K::Const;
    g.ctag = 2;
    return cone_ = intern(std::move(g));
}

uint32_t Circuit::add(std::vector<uint32_t> xs) {
    std::vector<uint32_t> keep;
    keep.reserve(xs.size());
    for (uint32_t x : xs)
        if (!is_const_zero(x)) keep.push_back(x);
    if (keep.empty()) return xs.empty() ? const_zero() : xs[0];
    if (keep.size() == 1) return keep[0];
    Gate g;
    g.k = Gate::K::Add;
    g.in = std::move(keep);
    return intern(std::move(g));
}

uint32_t Circuit::mul(uint32_t a, uint32_t b) {
    if (is_const_zero(a) || is_const_zero(b)) return is_const_zero(a) ? a : b;
    if (is_const_one(a)) return b;
    if (is_const_one(b)) return a;
    Gate g;
    g.k = Gate::K::Mul;
    g.in = {std::min(a, b), std::max(a, b)};
    return intern(std::move(g));
}

uint32_t Circuit::mul_chain(const std::vector<uint32_t>& xs) {
    if (xs.empty()) return const_one();
    uint32_t acc = xs[0];
    for (size_t i = 1; i < xs.size(); i++) acc = mul(acc, xs[i]);
    return acc;
}

uint32_t Circuit::perm(int rows, int cols, std::vector<uint32_t> entries) {
    if ((int)entries.size() != rows * cols) fail("CircuitShape", "permanent entry count mismatch");
    if (rows == 0) return const_one();
    if (rows == 1) return add(std::move(entries));
    if (rows > cols) return const_zero(); // no injective assignment exists
    Gate g;
    g.k = Gate::K::Perm;
    g.rows = (uint16_t)rows;
    g.cols = (uint16_t)cols;
    g.in = std::move(entries);
    return intern(std::move(g));
}

uint32_t Circuit::test(uint32_t x, const Num& v) {
    Gate g;
    g.k = Gate::K::Test;
    g.in = {x};
    g.cnum = v;
    return intern(std::move(g));
}

uint32_t Circuit::thr(std::vector<uint32_t> xs, long long lo, long long hi) {
    Gate g;
    g.k = Gate::K::Thr;
    g.in = std::move(xs);
    g.p1 = lo;
    g.p2 = hi;
    return intern(std::move(g));
}

uint32_t Circuit::modg(std::vector<uint32_t> xs, long long m, long long r) {
    if (m <= 0) fail("CircuitShape", "mod gate needs a positive modulus");
    Gate g;
    g.k = Gate::K::Mod;
    g.in = std::move(xs);
    g.p1 = m;
    g.p2 = r;
    return intern(std::move(g));
}

// --- evaluation ---------------------------------------------------------------

namespace {
Value perm_subset_dp(const std::vector<Value>& m, int rows, int cols, const Semiring& s) {
    // dp[S] = permanent of rows S restricted to the columns seen so far
    std::vector<Value> dp((size_t)1 << rows, s->zero);
    dp[0] = s->one;
    for (int c = 0; c < cols; c++) {
        for (int S = (1 << rows) - 1; S > 0; S--) {
            Value acc = dp[S];
            for (int r = 0; r < rows; r++)
                if (S >> r & 1) acc = s->add(acc, s->mul(dp[S ^ (1 << r)], m[(size_t)r * cols + c]));
            dp[S] = std::move(acc);
        }
    }
    return dp[(1 << rows) - 1];
}
} // namespace

Value Circuit::compute(uint32_t gi) const {
    const Gate& g = gates[gi];
    switch (g.k) {
        case Gate::K::Input:
            fail("CircuitEval", "inputs are bound, not computed");
        case Gate::K::Const:
            if (g.ctag == 1) return sem_->zero;
            if (g.ctag == 2) return sem_->one;
            return sem_->from_num(g.cnum);
        case Gate::K::Add: {
            Value acc = sem_->zero;
            for (uint32_t x : g.in) acc = sem_->add(acc, cache_[x]);
            return acc;
        }
        case Gate::K::Mul:
            return sem_->mul(cache_[g.in[0]], cache_[g.in[1]]);
        case Gate::K::Perm: {
            std::vector<Value> m;
            m.reserve(g.in.size());
            for (uint32_t x : g.in) m.push_back(cache_[x]);
            return perm_subset_dp(m, g.rows, g.cols, sem_);
        }
        case Gate::K::Test:
            return sem_->iverson(sem_->eq(cache_[g.in[0]], Value(g.cnum)));
        case Gate::K::Thr:
        case Gate::K::Mod: {
            long long c = 0;
            for (uint32_t x : g.in) c += sem_->eq(cache_[x], sem_->one) ? 1 : 0;
            return g.k == Gate::K::Thr ? sem_->iverson(c >= g.p1 && c <= g.p2)
                                       : sem_->iverson(c % g.p1 == g.p2);
        }
    }
    fail("CircuitEval", "unknown gate kind");
}

void Circuit::evaluate(const std::function<Value(const InputKey&)>& valuation, Semiring s) {
    sem_ = std::move(s);
    cache_.assign(gates.size(), sem_->zero);
    ones_.assign(gates.size(), 0);
    size_t next_input = 0;
    for (uint32_t gi = 0; gi < (uint32_t)gates.size(); gi++) {
        const Gate& g = gates[gi];
        if (g.k == Gate::K::Input) {
            cache_[gi] = valuation(input_keys_[next_input++]);
            continue;
        }
        if (g.k == Gate::K::Thr || g.k == Gate::K::Mod) {
            long long c = 0;
            for (uint32_t x : g.in) c += sem_->eq(cache_[x], sem_->one) ? 1 : 0;
            ones_[gi] = c;
        }
        cache_[gi] = compute(gi);
    }
    build_fanout();
}

void Circuit::build_fanout() {
    if (!fanout_.empty() && fanout_.size() == gates.size()) return;
    fanout_.assign(gates.size(), {});
    for (uint32_t gi = 0; gi < (uint32_t)gates.size(); gi++)
        for (uint32_t x : gates[gi].in) fanout_[x].push_back(gi);
}

Value Circuit::update_input(const InputKey& key, const Value& v) {
    if (cache_.empty()) fail("CircuitEval", "update before evaluate");
    build_fanout();
    uint32_t g0 = input_gate(key);
    last_visits_ = 0;
    bool freeish = sem_->kind == SemiringHandle::Kind::Free;
    if (!freeish && sem_->eq(cache_[g0], v)) return cache_[output];

    std::set<uint32_t> dirty;
    std::map<uint32_t, std::vector<std::pair<Value, Value>>> deltas;
    auto notify = [&](uint32_t from, const Value& oldv, const Value& newv) {
        for (uint32_t p : fanout_[from]) {
            deltas[p].push_back({oldv, newv});
            dirty.insert(p);
        }
    };
    Value old0 = cache_[g0];
    cache_[g0] = v;
    notify(g0, old0, v);

    while (!dirty.empty()) {
        uint32_t gi = *dirty.begin();
        dirty.erase(dirty.begin());
        last_visits_++;
        const Gate& g = gates[gi];
        auto& ch = deltas[gi];
        Value old = cache_[gi];
        Value nv;
        if ((g.k == Gate::K::Thr || g.k == Gate::K::Mod)) {
            for (auto& [o, n] : ch)
                ones_[gi] += (sem_->eq(n, sem_->one) ? 1 : 0) - (sem_->eq(o, sem_->one) ? 1 : 0);
            long long c = ones_[gi];
            nv = g.k == Gate::K::Thr ? sem_->iverson(c >= g.p1 && c <= g.p2)
                                     : sem_->iverson(c % g.p1 == g.p2);
        } else if (g.k == Gate::K::Add && sem_->neg_fn && 2 * ch.size() < g.in.size()) {
            nv = old;
            for (auto& [o, n] : ch) nv = sem_->add(sem_->add(nv, sem_->neg(o)), n);
        } else {
            nv = compute(gi);
        }
        deltas.erase(gi);
        bool changed = freeish || !sem_->eq(old, nv);
        if (!changed) continue;
        cache_[gi] = nv;
        notify(gi, old, nv);
    }
    return cache_[output];
}

bool Circuit::check_cache_consistency() const {
    if (cache_.empty()) return false;
    for (uint32_t gi = 0; gi < (uint32_t)gates.size(); gi++) {
        if (gates[gi].k == Gate::K::Input) continue;
        if (!sem_->eq(cache_[gi], compute(gi))) return false;
    }
    return true;
}

// --- measures -----------------------------------------------------------------

CircuitStats Circuit::stats(long long reachout_gate_cap) const {
    CircuitStats st;
    st.size = (long long)gates.size();
    std::vector<int> depth(gates.size(), 0);
    std::vector<int> fo(gates.size(), 0);
    for (uint32_t gi = 0; gi < (uint32_t)gates.size(); gi++) {
        const Gate& g = gates[gi];
        st.edges += (long long)g.in.size();
        int d = 0;
        for (uint32_t x : g.in) {
            d = std::max(d, depth[x] + 1);
            fo[x]++;
        }
        depth[gi] = d;
        st.depth = std::max(st.depth, d);
        if (g.k == Gate::K::Perm) st.max_perm_rows = std::max<int>(st.max_perm_rows, g.rows);
    }
    for (int f : fo) st.max_fanout = std::max(st.max_fanout, f);
    if (st.size <= reachout_gate_cap) {
        // reach[g] = gates reachable from g along fan-out edges, incl. g
        size_t n = gates.size(), words = (n + 63) / 64;
        std::vector<uint64_t> reach(n * words, 0);
        // propagate child <- parent in descending order (parents have larger ids)
        for (uint32_t gi = (uint32_t)n; gi-- > 0;) {
            uint64_t* rg = &reach[(size_t)gi * words];
            rg[gi / 64] |= 1ull << (gi % 64);
            for (uint32_t x : gates[gi].in) {
                uint64_t* rx = &reach[(size_t)x * words];
                for (size_t w = 0; w < words; w++) rx[w] |= rg[w];
            }
        }
        long long best = 0;
        for (uint32_t gi = 0; gi < (uint32_t)n; gi++) {
            long long c = 0;
            const uint64_t* rg = &reach[(size_t)gi * words];
            for (size_t w = 0; w < words; w++) c += __builtin_popcountll(rg[w]);
            best = std::max(best, c);
        }
        st.max_reachout = best;
    }
    return st;
}

std::string Circuit::dump(const std::function<std::string(int)>& label) const {
    auto el = [&](int id) { return label ? label(id) : std::to_string(id); };
    std::ostringstream os;
    size_t next_input = 0;
    for (uint32_t gi = 0; gi < (uint32_t)gates.size(); gi++) {
        const Gate& g = gates[gi];
        os << "g" << gi << " = ";
        switch (g.k) {
            case Gate::K::Input: {
                const InputKey& k = input_keys_[next_input++];
                os << "input " << k.sym << "(";
                for (size_t i = 0; i < k.tuple.size(); i++) os << (i ? "," : "") << el(k.tuple[i]);
                os << ")";
                break;
            }
            case Gate::K::Const:
                os << "const " << (g.ctag == 1 ? "zero" : g.ctag == 2 ? "one" : num_str(g.cnum));
                break;
            case Gate::K::Add:
                os << "add";
                for (uint32_t x : g.in) os << " g" << x;
                break;
            case Gate::K::Mul:
                os << "mul g" << g.in[0] << " g" << g.in[1];
                break;
            case Gate::K::Perm: {
                os << "perm " << g.rows << "x" << g.cols << " [";
                for (int r = 0; r < g.rows; r++) {
                    if (r) os << ";";
                    for (int c = 0; c < g.cols; c++)
                        os << (c ? " " : "") << "g" << g.in[(size_t)r * g.cols + c];
                }
                os << "]";
                break;
            }
            case Gate::K::Test:
                os << "test g" << g.in[0] << " == " << num_str(g.cnum);
                break;
            case Gate::K::Thr: {
                os << "thr [" << g.p1 << ",";
                if (g.p2 >= LLONG_MAX) os << "inf";
                else os << g.p2;
                os << "]";
                for (uint32_t x : g.in) os << " g" << x;
                break;
            }
            case Gate::K::Mod:
                os << "mod " << g.p1 << " r" << g.p2;
                for (uint32_t x : g.in) os << " g" << x;
                break;
        }
        os << "\n";
    }
    auto st = stats();
    os << "# output=g" << output << " gates=" << st.size << " edges=" << st.edges
       << " depth=" << st.depth << " max_fanout=" << st.max_fanout
       << " max_perm_rows=" << st.max_perm_rows << " reachout=" << st.max_reachout << "\n";
    return os.str();
}

// --- reference permanent --------------------------------------------------------

Value perm_reference(const std::vector<std::vector<Value>>& m, const Semiring& s) {
    int rows = (int)m.size();
    if (rows == 0) return s->one;
    int cols = (int)m[0].size();
    for (const auto& r : m)
        if ((int)r.size() != cols) fail("CircuitShape", "ragged permanent matrix");
    if (rows > 8 || cols > 10) fail("ScaleExceeded", "reference permanent limited to 8x10");
    Value total = s->zero;
    std::vector<int> pick(rows, -1);
    std::vector<char> used(cols, 0);
    std::function<void(int, const Value&)> rec = [&](int r, const Value& acc) {
        if (r == rows) {
            total = s->add(total, acc);
            return;
        }
        for (int c = 0; c < cols; c++) {
            if (used[c]) continue;
            used[c] = 1;
            rec(r + 1, s->mul(acc, m[r][c]));
            used[c] = 0;
        }
    };
    rec(0, s->one);
    return total;
}

// --- lowerings ------------------------------------------------------------------

namespace {

constexpr int kMaxPermRows = 6;

// Ordered-permanent divide and conquer: sum over all row orders of the
// order-respecting permanent, which splits the column range in half and
// distributes an order-prefix of the rows to the left part. Subproblems are
// memoized on (row sequence, column interval), so the shared structure across
// row orders keeps the size linear in the column count.
uint32_t lower_generic(Circuit& out, int k, int n, const std::vector<uint32_t>& entry) {
    if (k == 0) return out.const_one();
    if (k > kMaxPermRows) fail("ScaleExceeded", "permanent fan-in above supported bound");
    std::map<std::tuple<std::vector<int>, int, int>, uint32_t> memo;
    std::function<uint32_t(const std::vector<int>&, int, int)> rec =
        [&](const std::vector<int>& rows, int lo, int hi) -> uint32_t {
        if (rows.empty()) return out.const_one();
        if ((int)rows.size() > hi - lo) return out.const_zero();
        if (hi - lo == 1) return entry[(size_t)rows[0] * n + lo];
        auto key = std::make_tuple(rows, lo, hi);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        int mid = lo + (hi - lo) / 2;
        std::vector<uint32_t> terms;
        for (int i = 0; i <= (int)rows.size(); i++) {
            std::vector<int> left(rows.begin(), rows.begin() + i);
            std::vector<int> right(rows.begin() + i, rows.end());
            uint32_t a = rec(left, lo, mid);
            if (out.is_const_zero(a)) continue;
            uint32_t b = rec(right, mid, hi);
            terms.push_back(out.mul(a, b));
        }
        uint32_t g = out.add(std::move(terms));
        memo.emplace(std::move(key), g);
        return g;
    };
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::vector<uint32_t> terms;
    do terms.push_back(rec(order, 0, n));
    while (std::next_permutation(order.begin(), order.end()));
    return out.add(std::move(terms));
}

void partitions_of(int k, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> block(k, 0); // restricted growth string
    std::function<void(int, int)> rec = [&](int i, int maxb) {
        if (i == k) {
            visit(block);
            return;
        }
        for (int b = 0; b <= maxb; b++) {
            block[i] = b;
            rec(i + 1, std::max(maxb, b + 1));
        }
    };
    rec(0, 0);
}

// Inclusion-exclusion over the partition lattice: the permanent equals the sum
// over set partitions P of the row set of mu(P) * prod over blocks B of the
// power sum S_B = sum_c prod_{r in B} entry(r, c), with integer coefficient
// mu(P) = prod (-1)^{|B|-1} (|B|-1)!. Constant depth; subtraction required.
uint32_t lower_ring(Circuit& out, int k, int n, const std::vector<uint32_t>& entry,
                    const Semiring& s) {
    if (k == 0) return out.const_one();
    if (k > kMaxPermRows) fail("ScaleExceeded", "permanent fan-in above supported bound");
    if (!s->neg_fn) fail("NotARing", "ring lowering needs additive inverses");
    int full = 1 << k;
    // column products for every row subset, shared via subset splitting
    std::vector<std::vector<uint32_t>> colprod(full); // [mask][column]
    for (int mask = 1; mask < full; mask++) {
        colprod[mask].resize(n);
        int low = mask & -mask, rest = mask ^ low, r = __builtin_ctz(low);
        for (int c = 0; c < n; c++)
            colprod[mask][c] = rest == 0 ? entry[(size_t)r * n + c]
                                         : out.mul(colprod[rest][c], entry[(size_t)r * n + c]);
    }
    std::vector<uint32_t> powsum(full, 0);
    for (int mask = 1; mask < full; mask++) powsum[mask] = out.add(colprod[mask]);

    std::vector<uint32_t> terms;
    partitions_of(k, [&](const std::vector<int>& block) {
        int nb = 1 + *std::max_element(block.begin(), block.end());
        std::vector<int> bmask(nb, 0);
        for (int i = 0; i < k; i++) bmask[block[i]] |= 1 << i;
        long long coef = 1;
        std::vector<uint32_t> factors;
        for (int b = 0; b < nb; b++) {
            int sz = __builtin_popcount((unsigned)bmask[b]);
            for (int i = 1; i < sz; i++) coef *= -i;
            factors.push_back(powsum[bmask[b]]);
        }
        uint32_t t = out.mul_chain(factors);
        if (coef != 1) t = out.mul(out.constant(Num::of(coef)), t);
        terms.push_back(t);
    });
    return out.add(std::move(terms));
}

long long fallfact(long long m, int j) {
    long long r = 1;
    for (int i = 0; i < j; i++) {
        if (m - i <= 0) return 0;
        r *= m - i;
    }
    return r;
}

// Finite-semiring lowering. Columns are classified by their entry vector
// v in S^k via test-gate indicators; for each class only the number of its
// columns matters, so falling-factorial weights of the ones-count are realized
// with threshold and mod gates (n*s is eventually periodic in n for finite S).
// A subset DP over the rows then assembles the permanent class by class:
//   P'[T] = sum_{U subseteq T} P[T\U] * fallfact(m_v, |U|) * prod_{r in U} v_r.
uint32_t lower_finite(Circuit& out, int k, int n, const std::vector<uint32_t>& entry,
                      const Semiring& s) {
    if (k == 0) return out.const_one();
    if (k > kMaxPermRows) fail("ScaleExceeded", "permanent fan-in above supported bound");
    if (s->universe.empty()) fail("NotFinite", "finite lowering needs an enumerated universe");
    int sz = (int)s->universe.size();

    // additive lasso of the universe: n*s settles into a cycle
    long long tail = 0, period = 1;
    for (const Value& u : s->universe) {
        std::vector<Value> seq{s->zero};
        long long t = -1, p = 0;
        while (t < 0) {
            Value nx = s->add(seq.back(), u);
            for (long long i = 0; i < (long long)seq.size(); i++)
                if (s->eq(seq[i], nx)) {
                    t = i;
                    p = (long long)seq.size() - i;
                    break;
                }
            seq.push_back(std::move(nx));
            if (seq.size() > 4096) fail("NotFinite", "additive orbit failed to close");
        }
        tail = std::max(tail, t);
        period = std::lcm(period, p);
    }

    // per-column, per-row test gates and class-indicator tries
    std::vector<std::vector<uint32_t>> tg((size_t)k * sz, std::vector<uint32_t>(n));
    for (int r = 0; r < k; r++)
        for (int v = 0; v < sz; v++)
            for (int c = 0; c < n; c++)
                tg[(size_t)r * sz + v][c] = out.test(entry[(size_t)r * n + c], s->universe[v].num());
    long long nclasses = 1;
    for (int r = 0; r < k; r++) nclasses *= sz;
    // indicators level by level; level r holds sz^(r+1) prefix classes
    std::vector<std::vector<uint32_t>> pref((size_t)sz, std::vector<uint32_t>(n));
    for (int v = 0; v < sz; v++) pref[v] = tg[v];
    for (int r = 1; r < k; r++) {
        std::vector<std::vector<uint32_t>> nxt;
        nxt.reserve(pref.size() * sz);
        for (auto& p : pref)
            for (int v = 0; v < sz; v++) {
                std::vector<uint32_t> row(n);
                for (int c = 0; c < n; c++) row[c] = out.mul(p[c], tg[(size_t)r * sz + v][c]);
                nxt.push_back(std::move(row));
            }
        pref = std::move(nxt);
    }

    // counting gadget: value of fallfact(m, j) * pi as a function of the
    // ones-count m of `inds`, explicit below m0 and periodic above; the
    // threshold/mod gates are cached per class and shared across row subsets
    std::map<std::pair<long long, long long>, uint32_t> thr_cache;
    std::map<long long, uint32_t> mod_cache;
    auto count_weight = [&](const std::vector<uint32_t>& inds, int j, const Value& pi) {
        auto get_thr = [&](long long lo, long long hi) {
            auto [it, fresh] = thr_cache.try_emplace({lo, hi}, 0);
            if (fresh) it->second = out.thr(inds, lo, hi);
            return it->second;
        };
        auto get_mod = [&](long long t) {
            auto [it, fresh] = mod_cache.try_emplace(t, 0);
            if (fresh) it->second = out.modg(inds, period, t);
            return it->second;
        };
        long long m0 = std::max<long long>(j, tail);
        std::vector<uint32_t> terms;
        for (long long m = 0; m < m0; m++) {
            Value val = s->times_int(fallfact(m, j), pi);
            if (s->is_zero(val)) continue;
            terms.push_back(out.mul(get_thr(m, m), out.constant(val.num())));
        }
        for (long long t = 0; t < period; t++) {
            long long rep = m0 + ((t - m0) % period + period) % period;
            Value val = s->times_int(fallfact(rep, j), pi);
            if (s->is_zero(val)) continue;
            uint32_t cond = get_thr(m0, LLONG_MAX);
            if (period > 1) cond = out.mul(cond, get_mod(t));
            terms.push_back(out.mul(cond, out.constant(val.num())));
        }
        return out.add(std::move(terms));
    };

    int full = 1 << k;
    std::vector<uint32_t> P(full, 0);
    P[0] = out.const_one();
    for (int t = 1; t < full; t++) P[t] = out.const_zero();
    std::vector<int> digits(k);
    for (long long cls = 0; cls < nclasses; cls++) {
        long long x = cls;
        for (int r = k - 1; r >= 0; r--) {
            digits[r] = (int)(x % sz);
            x /= sz;
        }
        const std::vector<uint32_t>& inds = pref[(size_t)cls];
        thr_cache.clear();
        mod_cache.clear();
        std::vector<uint32_t> W(full, 0); // weight gate per row subset U
        for (int U = 1; U < full; U++) {
            Value pi = s->one;
            int j = 0;
            for (int r = 0; r < k; r++)
                if (U >> r & 1) {
                    pi = s->mul(pi, s->universe[(size_t)digits[r]]);
                    j++;
                }
            W[U] = count_weight(inds, j, pi);
        }
        std::vector<uint32_t> nP(full);
        nP[0] = P[0];
        for (int T = 1; T < full; T++) {
            std::vector<uint32_t> terms{P[T]};
            for (int U = T; U > 0; U = (U - 1) & T) terms.push_back(out.mul(P[T ^ U], W[U]));
            nP[T] = out.add(std::move(terms));
        }
        P = std::move(nP);
    }
    return P[full - 1];
}

} // namespace

Circuit lower_circuit(const Circuit& c, LowerStrategy strategy, const Semiring& s) {
    Circuit out;
    std::vector<uint32_t> map(c.gates.size(), 0);
    size_t next_input = 0;
    for (uint32_t gi = 0; gi < (uint32_t)c.gates.size(); gi++) {
        const Gate& g = c.gates[gi];
        if (g.k == Gate::K::Input) {
            map[gi] = out.input(c.input_keys()[next_input++]);
            continue;
        }
        if (g.k != Gate::K::Perm) {
            Gate h = g;
            for (uint32_t& x : h.in) x = map[x];
            out.gates.push_back(std::move(h));
            map[gi] = (uint32_t)out.gates.size() - 1;
            continue;
        }
        std::vector<uint32_t> entry(g.in.size());
        for (size_t i = 0; i < g.in.size(); i++) entry[i] = map[g.in[i]];
        switch (strategy) {
            case LowerStrategy::Generic:
                map[gi] = lower_generic(out, g.rows, g.cols, entry);
                break;
            case LowerStrategy::Ring:
                map[gi] = lower_ring(out, g.rows, g.cols, entry, s);
                break;
            case LowerStrategy::Finite:
                map[gi] = lower_finite(out, g.rows, g.cols, entry, s);
                break;
        }
    }
    out.output = map[c.output];
    return out;
}

Circuit perm_gate_circuit(int rows, int cols) {
    Circuit c;
    std::vector<uint32_t> entries;
    entries.reserve((size_t)rows * cols);
    for (int r = 0; r < rows; r++)
        for (int col = 0; col < cols; col++) entries.push_back(c.input(InputKey{"m", {r, col}}));
    c.output = c.perm(rows, cols, std::move(entries));
    return c;
}

} // namespace semicirc

#include "semicirc/decomp.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace semicirc {

// --- degeneracy orientation ---------------------------------------------------

Orientation degeneracy_orient(const Graph& g) {
    int n = g.n;
    std::vector<int> deg(n), pos(n), vert(n);
    int maxd = 0;
    for (int v = 0; v < n; v++) {
        deg[v] = (int)g.adj[v].size();
        maxd = std::max(maxd, deg[v]);
    }
    // bucket sort by degree
    std::vector<int> bin(maxd + 2, 0);
    for (int v = 0; v < n; v++) bin[deg[v]]++;
    int start = 0;
    for (int d = 0; d <= maxd; d++) {
        int num = bin[d];
        bin[d] = start;
        start += num;
    }
    for (int v = 0; v < n; v++) {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]]++;
    }
    for (int d = maxd; d >= 1; d--) bin[d] = bin[d - 1];
    if (maxd >= 0) bin[0] = 0;

    std::vector<char> removed(n, 0);
    std::vector<int> order; // removal order
    order.reserve(n);
    for (int i = 0; i < n; i++) {
        int v = vert[i];
        order.push_back(v);
        removed[v] = 1;
        for (int u : g.adj[v]) {
            if (removed[u] || deg[u] <= deg[v]) continue;
            int pu = pos[u], pw = bin[deg[u]], w = vert[pw];
            vert[pw] = u; vert[pu] = w;
            pos[u] = pw; pos[w] = pu;
            bin[deg[u]]++;
            deg[u]--;
        }
    }

    std::vector<int> rank(n);
    for (int i = 0; i < n; i++) rank[order[i]] = i;
    Orientation o;
    o.out.resize(n);
    for (int v = 0; v < n; v++)
        for (int u : g.adj[v])
            if (rank[u] > rank[v]) o.out[v].push_back(u); // v removed first: edge v->u
    for (auto& lst : o.out) {
        std::sort(lst.begin(), lst.end());
        o.d = std::max(o.d, (int)lst.size());
    }
    return o;
}

// --- DFS forests ---------------------------------------------------------------

void LabelledForest::add_mark(int v, uint32_t m) {
    auto& ms = marks[v];
    auto it = std::lower_bound(ms.begin(), ms.end(), m);
    if (it == ms.end() || *it != m) ms.insert(it, m);
}

LabelledForest dfs_forest(const Graph& g) {
    LabelledForest f;
    f.n = g.n;
    f.parent.assign(g.n, -1);
    f.depth.assign(g.n, 0);
    f.marks.assign(g.n, {});
    std::vector<std::pair<int, size_t>> stack;
    for (int root = 0; root < g.n; root++) {
        if (f.parent[root] != -1) continue;
        f.parent[root] = root;
        f.depth[root] = 0;
        stack.push_back({root, 0});
        while (!stack.empty()) {
            auto& [v, idx] = stack.back();
            if (idx == g.adj[v].size()) {
                stack.pop_back();
                continue;
            }
            int u = g.adj[v][idx++];
            if (f.parent[u] != -1) continue;
            f.parent[u] = v;
            f.depth[u] = f.depth[v] + 1;
            f.max_depth = std::max(f.max_depth, f.depth[u]);
            stack.push_back({u, 0});
        }
    }
    return f;
}

// --- exact treedepth ------------------------------------------------------------

namespace {

struct TdSearch {
    const Graph& g;
    long long budget;
    std::unordered_map<std::vector<int>, int, VecHash> exact; // component -> exact td
    std::unordered_map<std::vector<int>, int, VecHash> lower; // component -> known td > value

    explicit TdSearch(const Graph& gr, long long b) : g(gr), budget(b) {}

    std::vector<std::vector<int>> components(const std::vector<int>& verts) {
        std::unordered_set<int> in(verts.begin(), verts.end());
        std::unordered_set<int> seen;
        std::vector<std::vector<int>> comps;
        for (int s : verts) {
            if (seen.count(s)) continue;
            std::vector<int> comp, stack{s};
            seen.insert(s);
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                comp.push_back(v);
                for (int u : g.adj[v])
                    if (in.count(u) && !seen.count(u)) {
                        seen.insert(u);
                        stack.push_back(u);
                    }
            }
            std::sort(comp.begin(), comp.end());
            comps.push_back(std::move(comp));
        }
        return comps;
    }

    // exact treedepth of connected component `comp`, or limit+1 if > limit;
    // fills parents into `forest` on success (root parent = given root parent).
    int td_component(const std::vector<int>& comp, int limit, std::vector<int>* parent,
                     int above) {
        if ((int)comp.size() == 1) {
            if (limit < 1) return limit + 1;
            if (parent) (*parent)[comp[0]] = above;
            return 1;
        }
        if (limit <= 1) return limit + 1;
        if (!parent) {
            auto it = exact.find(comp);
            if (it != exact.end()) return it->second <= limit ? it->second : limit + 1;
            auto lb = lower.find(comp);
            if (lb != lower.end() && lb->second >= limit) return limit + 1;
        }
        if (--budget < 0) fail("BudgetExceeded", "treedepth search budget exhausted");
        int best = limit + 1;
        // root candidates ordered by degree within the component (high first)
        std::vector<int> cands = comp;
        std::sort(cands.begin(), cands.end(), [&](int a, int b) {
            return g.adj[a].size() > g.adj[b].size() || (g.adj[a].size() == g.adj[b].size() && a < b);
        });
        for (int r : cands) {
            std::vector<int> rest;
            rest.reserve(comp.size() - 1);
            for (int v : comp)
                if (v != r) rest.push_back(v);
            int sub = 0;
            auto comps = components(rest);
            bool ok = true;
            for (const auto& c : comps) {
                int t = td_component(c, std::min(limit, best - 1) - 1, nullptr, -1);
                sub = std::max(sub, t);
                if (1 + sub >= best) { ok = false; break; }
            }
            if (ok && 1 + sub < best) best = 1 + sub;
        }
        if (!parent) {
            if (best <= limit) exact[comp] = best;
            else {
                auto& lb = lower[comp];
                lb = std::max(lb, limit);
            }
        }
        if (best <= limit && parent) {
            // re-run the winning decomposition to emit parents
            for (int r : cands) {
                std::vector<int> rest;
                for (int v : comp)
                    if (v != r) rest.push_back(v);
                int sub = 0;
                bool fits = true;
                std::vector<int> chosen;
                for (const auto& c : components(rest)) {
                    int t = td_component(c, best - 1, nullptr, -1);
                    if (t > best - 1) { fits = false; break; }
                    sub = std::max(sub, t);
                }
                (void)chosen;
                if (!fits) continue;
                (*parent)[r] = above;
                for (const auto& c : components(rest)) td_component(c, best - 1, parent, r);
                break;
            }
        }
        return best;
    }
};

} // namespace

std::optional<ElimForest> treedepth_exact(const Graph& g, int limit, long long node_budget) {
    TdSearch s(g, node_budget);
    std::vector<int> all(g.n);
    std::iota(all.begin(), all.end(), 0);
    ElimForest f;
    f.parent.assign(g.n, -1);
    int depth = 0;
    for (const auto& comp : s.components(all)) {
        int t = s.td_component(comp, limit, nullptr, -1);
        if (t > limit) return std::nullopt;
        s.td_component(comp, t, &f.parent, -1);
        depth = std::max(depth, t);
    }
    f.depth = depth;
    return f;
}

namespace {

// Greedy separator elimination for components too big for exact search:
// root at the vertex minimizing the largest remaining component.
int greedy_elim(const Graph& g, const std::vector<int>& comp, std::vector<int>& parent,
                int above, TdSearch& exact) {
    if (comp.empty()) return 0;
    if ((int)comp.size() <= 18) {
        int t = exact.td_component(comp, (int)comp.size(), nullptr, -1);
        exact.td_component(comp, t, &parent, above);
        return t;
    }
    // scanning every root costs |comp|^2 per level; a bounded candidate set
    // (highest degrees plus an approximate BFS center) keeps each level linear
    std::vector<int> cands = comp;
    std::sort(cands.begin(), cands.end(), [&](int a, int b) {
        return g.adj[a].size() > g.adj[b].size() || (g.adj[a].size() == g.adj[b].size() && a < b);
    });
    if (cands.size() > 24) cands.resize(24);
    {
        std::unordered_set<int> in(comp.begin(), comp.end());
        auto bfs = [&](int s) {
            std::unordered_map<int, int> dist{{s, 0}};
            std::vector<int> q{s};
            int far = s;
            for (size_t i = 0; i < q.size(); i++) {
                int v = q[i];
                if (dist[v] > dist[far]) far = v;
                for (int u : g.adj[v])
                    if (in.count(u) && !dist.count(u)) {
                        dist[u] = dist[v] + 1;
                        q.push_back(u);
                    }
            }
            return std::pair<int, std::unordered_map<int, int>>{far, std::move(dist)};
        };
        int a = bfs(comp[0]).first;
        auto [b, dist] = bfs(a);
        // walk back from b to the midpoint of an approximately longest path
        int mid = b, steps = dist[b] / 2;
        for (int i = 0; i < steps; i++)
            for (int u : g.adj[mid])
                if (in.count(u) && dist.count(u) && dist[u] == dist[mid] - 1) {
                    mid = u;
                    break;
                }
        cands.push_back(mid);
    }
    int best = -1;
    size_t best_worst = SIZE_MAX;
    for (int r : cands) {
        std::vector<int> rest;
        for (int v : comp)
            if (v != r) rest.push_back(v);
        size_t worst = 0;
        for (const auto& c : exact.components(rest)) worst = std::max(worst, c.size());
        if (worst < best_worst) { best_worst = worst; best = r; }
    }
    parent[best] = above;
    std::vector<int> rest;
    for (int v : comp)
        if (v != best) rest.push_back(v);
    int sub = 0;
    for (const auto& c : exact.components(rest))
        sub = std::max(sub, greedy_elim(g, c, parent, best, exact));
    return 1 + sub;
}

} // namespace

ElimForest elimination_forest(const Graph& g) {
    TdSearch s(g, 50'000'000);
    std::vector<int> all(g.n);
    std::iota(all.begin(), all.end(), 0);
    ElimForest f;
    f.parent.assign(g.n, -1);
    for (const auto& comp : s.components(all))
        f.depth = std::max(f.depth, greedy_elim(g, comp, f.parent, -1, s));
    return f;
}

// --- low-treedepth coloring ------------------------------------------------------

namespace {

Graph augment_round(const Graph& h) {
    Orientation o = degeneracy_orient(h);
    Graph out = h;
    for (int v = 0; v < h.n; v++) {
        const auto& ov = o.out[v];
        // fraternal: out-neighbors become adjacent
        for (size_t i = 0; i < ov.size(); i++)
            for (size_t j = i + 1; j < ov.size(); j++)
                if (!out.has_edge(ov[i], ov[j])) out.add_edge(ov[i], ov[j]);
        // transitive: v adjacent to out-neighbors of out-neighbors
        for (int u : ov)
            for (int w : o.out[u])
                if (w != v && !out.has_edge(v, w)) out.add_edge(v, w);
    }
    out.finish();
    return out;
}

std::vector<int> greedy_color(const Graph& h, unsigned seed, int& palette) {
    // color along the degeneracy orientation: a vertex is colored only after
    // all its out-neighbors, so at most outdeg(v) colors are blocked and the
    // palette stays within degeneracy(h)+1 no matter how large the graph is
    Orientation o = degeneracy_orient(h);
    std::vector<std::vector<int>> rin(h.n);
    std::vector<int> need(h.n);
    for (int v = 0; v < h.n; v++) {
        need[v] = (int)o.out[v].size();
        for (int u : o.out[v]) rin[u].push_back(v);
    }
    // the seed only perturbs tie-breaking among simultaneously ready vertices
    std::vector<int> order(h.n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> queue;
    queue.reserve(h.n);
    for (int v : order)
        if (need[v] == 0) queue.push_back(v);

    std::vector<int> color(h.n, -1);
    palette = 0;
    std::vector<char> used;
    for (size_t i = 0; i < queue.size(); i++) {
        int v = queue[i];
        used.assign(palette + 1, 0);
        for (int u : o.out[v]) used[color[u]] = 1;
        int c = 0;
        while (used[c]) c++;
        color[v] = c;
        palette = std::max(palette, c + 1);
        for (int w : rin[v])
            if (--need[w] == 0) queue.push_back(w);
    }
    return color;
}

Graph induced(const Graph& g, const std::vector<char>& keep) {
    Graph out;
    out.n = g.n;
    out.adj.resize(g.n);
    for (int v = 0; v < g.n; v++) {
        if (!keep[v]) continue;
        for (int u : g.adj[v])
            if (u > v && keep[u]) out.add_edge(v, u);
    }
    out.finish();
    return out;
}

void subsets_upto(int k, int p, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int from) {
        if (!cur.empty()) fn(cur);
        if ((int)cur.size() == p) return;
        for (int c = from; c < k; c++) {
            cur.push_back(c);
            rec(c + 1);
            cur.pop_back();
        }
    };
    rec(0);
}

} // namespace

LtdColoring low_treedepth_coloring(const Graph& g, int p, unsigned seed, bool certify,
                                   int depth_cap, int max_retries) {
    if (p < 1) fail("TypeMismatch", "p must be >= 1");
    Graph h = g;
    int rounds = std::max(1, p - 1);
    for (int r = 0; r < rounds; r++) h = augment_round(h);

    LtdColoring best;
    for (int attempt = 0; attempt <= max_retries; attempt++) {
        LtdColoring c;
        c.p = p;
        c.color = greedy_color(h, seed + attempt, c.palette);
        if (attempt > 0) {
            // palette escalation: split the largest class of the previous attempt
            c = best;
            std::vector<int> sizes(c.palette, 0);
            for (int col : c.color) sizes[col]++;
            int big = (int)(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
            int parity = 0;
            for (auto& col : c.color)
                if (col == big && (parity ^= 1)) col = c.palette;
            c.palette++;
            c.certificates.clear();
            c.d = 0;
        }
        if (!certify) return c;

        bool ok = true;
        c.d = 0;
        c.certificates.clear();
        subsets_upto(c.palette, p, [&](const std::vector<int>& D) {
            if (!ok) return;
            std::vector<char> keep(g.n, 0);
            for (int v = 0; v < g.n; v++)
                for (int col : D)
                    if (c.color[v] == col) keep[v] = 1;
            Graph sub = induced(g, keep);
            ElimForest ef = elimination_forest(sub);
            if (ef.depth > depth_cap) { ok = false; return; }
            c.d = std::max(c.d, ef.depth);
            c.certificates.push_back({D, std::move(ef)});
        });
        best = c;
        if (ok) return c;
    }
    fail("CertificationFailed",
         "no certified low-treedepth coloring within the retry cap");
}

// --- bounded-treedepth encoding ----------------------------------------------------

Graph BinaryStructure::gaifman() const {
    Graph g;
    g.n = n;
    g.adj.resize(n);
    for (const auto& [name, pairs] : binary) {
        (void)name;
        for (auto [a, b] : pairs)
            if (a != b) g.add_edge(a, b);
    }
    g.finish();
    return g;
}

uint32_t mark_id(const std::string& name) { return IdentPool::instance().intern(name); }
std::string in_mark(const std::string& rel, int depth) {
    return "@in:" + rel + ":" + std::to_string(depth);
}
std::string out_mark(const std::string& rel, int depth) {
    return "@out:" + rel + ":" + std::to_string(depth);
}

namespace {
LabelledForest mark_binary(LabelledForest f, const BinaryStructure& s);
}

LabelledForest encode_bounded_td(const BinaryStructure& s) {
    return mark_binary(dfs_forest(s.gaifman()), s);
}

LabelledForest encode_bounded_td(const BinaryStructure& s, const ElimForest& skeleton) {
    LabelledForest f;
    f.n = s.n;
    f.parent.assign(s.n, -1);
    f.depth.assign(s.n, 0);
    f.marks.assign(s.n, {});
    for (int v = 0; v < s.n; v++) f.parent[v] = skeleton.parent[v] < 0 ? v : skeleton.parent[v];
    std::vector<char> done(s.n, 0);
    std::function<void(int)> fix = [&](int v) {
        if (done[v]) return;
        done[v] = 1;
        if (f.parent[v] == v) {
            f.depth[v] = 0;
            return;
        }
        fix(f.parent[v]);
        f.depth[v] = f.depth[f.parent[v]] + 1;
        f.max_depth = std::max(f.max_depth, f.depth[v]);
    };
    for (int v = 0; v < s.n; v++) fix(v);
    return mark_binary(std::move(f), s);
}

namespace {
LabelledForest mark_binary(LabelledForest f, const BinaryStructure& s) {
    f.marks = s.unary;
    for (auto& ms : f.marks) std::sort(ms.begin(), ms.end());
    for (const auto& [rel, pairs] : s.binary) {
        for (auto [a, b] : pairs) {
            // the ancestor property of the DFS forest guarantees comparability
            if (f.depth[a] <= f.depth[b] && f.ancestor_at_depth(b, f.depth[a]) == a) {
                f.add_mark(b, mark_id(in_mark(rel, f.depth[a])));
            } else if (f.depth[b] < f.depth[a] && f.ancestor_at_depth(a, f.depth[b]) == b) {
                f.add_mark(a, mark_id(out_mark(rel, f.depth[b])));
            } else {
                fail("GaifmanViolation",
                     "binary atom not along an ancestor path of the given forest");
            }
        }
    }
    return f;
}
} // namespace

std::vector<std::pair<int, int>> decode_binary(const LabelledForest& f, const std::string& rel) {
    std::vector<std::pair<int, int>> out;
    for (int v = 0; v < f.n; v++) {
        for (int i = 0; i <= f.depth[v]; i++) {
            int anc = f.ancestor_at_depth(v, i);
            if (f.has_mark(v, mark_id(in_mark(rel, i)))) out.push_back({anc, v});
            if (anc != v && f.has_mark(v, mark_id(out_mark(rel, i)))) out.push_back({v, anc});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace semicirc

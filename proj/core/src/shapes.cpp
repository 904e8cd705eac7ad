#include "semicirc/shapes.hpp"

#include <map>
#include <sstream>

namespace semicirc {

namespace {

// --- product extraction ------------------------------------------------------

struct Product {
    std::vector<Num> consts;
    std::vector<std::pair<std::string, std::string>> weights; // symbol, variable
    std::vector<std::pair<Formula, bool>> lits;               // atom, negated
};

Product merge_products(const Product& a, const Product& b) {
    Product p = a;
    p.consts.insert(p.consts.end(), b.consts.begin(), b.consts.end());
    p.weights.insert(p.weights.end(), b.weights.begin(), b.weights.end());
    p.lits.insert(p.lits.end(), b.lits.begin(), b.lits.end());
    return p;
}

void push_literal(Product& p, const Formula& f) {
    Formula atom = f;
    bool neg = false;
    if (atom->k == FormulaNode::K::Not) {
        neg = true;
        atom = atom->kids[0];
    }
    if (atom->k == FormulaNode::K::True) {
        if (neg) p.lits.push_back({f_false(), false});
        return;
    }
    if (atom->k == FormulaNode::K::False) {
        if (!neg) p.lits.push_back({f_false(), false});
        return;
    }
    if (atom->k != FormulaNode::K::Rel && atom->k != FormulaNode::K::Eq)
        fail("SyntaxError", "bracket is not a simple literal");
    for (const auto& t : atom->args)
        if (!t->is_var()) fail("SyntaxError", "literal over non-variable terms");
    p.lits.push_back({atom, neg});
}

std::vector<Product> expand_products(const Expr& e) {
    switch (e->k) {
        case ExprNode::K::Const: {
            Product p;
            p.consts.push_back(e->cval);
            return {p};
        }
        case ExprNode::K::Weight: {
            if (e->args.size() != 1 || !e->args[0]->is_var())
                fail("SyntaxError", "weight not applied to a single variable");
            Product p;
            p.weights.push_back({e->wsym, e->args[0]->var});
            return {p};
        }
        case ExprNode::K::Bracket: {
            Product p;
            push_literal(p, e->bracket);
            return {p};
        }
        case ExprNode::K::Add: {
            std::vector<Product> out;
            for (const auto& k : e->kids) {
                auto ps = expand_products(k);
                out.insert(out.end(), ps.begin(), ps.end());
            }
            return out;
        }
        case ExprNode::K::Mul: {
            std::vector<Product> out{Product{}};
            for (const auto& k : e->kids) {
                auto ps = expand_products(k);
                std::vector<Product> next;
                for (const auto& a : out)
                    for (const auto& b : ps) next.push_back(merge_products(a, b));
                out = std::move(next);
            }
            return out;
        }
        case ExprNode::K::Sum:
            fail("SyntaxError", "sum inside a basic expression");
    }
    fail("SyntaxError", "unknown expression node");
}

// --- skeleton enumeration ------------------------------------------------------

// A variable-merging pattern: one node per (level, ancestor class), exact
// depths, each variable anchored at its deepest class. Every assignment of
// the variables into a forest matches exactly one skeleton, injectively on
// the skeleton's nodes.
struct Skeleton {
    int n = 0;
    std::vector<int> parent;
    std::vector<int> depth;
    std::vector<int> anchor; // per variable

    // ancestor-or-self along parent links (depths are exact, so compare first)
    bool anc_or_self(int a, int b) const {
        while (depth[b] > depth[a]) b = parent[b];
        return a == b;
    }
};

// Partitions of `active` refining `prev` (vars may share a block only when
// they share a prev block), emitted as block ids in restricted-growth order.
void enum_refinements(const std::vector<int>& active, const std::vector<int>& prev,
                      std::vector<int>& blk, size_t i, int nblocks,
                      const std::function<void(int)>& cb) {
    if (i == active.size()) {
        cb(nblocks);
        return;
    }
    int x = active[i];
    for (int b = 0; b < nblocks; b++) {
        // all members of block b share a prev class; compare with any of them
        int rep = -1;
        for (size_t j = 0; j < i && rep < 0; j++)
            if (blk[active[j]] == b) rep = active[j];
        if (prev[rep] != prev[x]) continue;
        blk[x] = b;
        enum_refinements(active, prev, blk, i + 1, nblocks, cb);
    }
    blk[x] = nblocks;
    enum_refinements(active, prev, blk, i + 1, nblocks + 1, cb);
    blk[x] = -1;
}

void enum_skeletons(int k, int max_depth, const std::function<void(const Skeleton&)>& cb) {
    std::vector<int> delta(k, 0);
    // levels[i][x]: block id of x at level i, -1 when delta[x] < i
    std::vector<std::vector<int>> levels;
    std::function<void(int, int)> chains = [&](int level, int maxd) {
        std::vector<int> active;
        for (int x = 0; x < k; x++)
            if (delta[x] >= level) active.push_back(x);
        if (level > maxd || active.empty()) {
            Skeleton sk;
            sk.anchor.assign(k, -1);
            std::vector<std::vector<int>> node_of(levels.size());
            for (size_t i = 0; i < levels.size(); i++) {
                int nb = 0;
                for (int x = 0; x < k; x++) nb = std::max(nb, levels[i][x] + 1);
                node_of[i].assign(nb, -1);
                for (int b = 0; b < nb; b++) {
                    int id = sk.n++;
                    node_of[i][b] = id;
                    sk.depth.push_back((int)i);
                    int px = -1;
                    for (int x = 0; x < k && px < 0; x++)
                        if (levels[i][x] == b) px = x;
                    sk.parent.push_back(i == 0 ? id : node_of[i - 1][levels[i - 1][px]]);
                }
            }
            for (int x = 0; x < k; x++) sk.anchor[x] = node_of[delta[x]][levels[delta[x]][x]];
            cb(sk);
            return;
        }
        std::vector<int> prev(k, 0);
        if (level > 0) prev = levels[level - 1];
        std::vector<int> blk(k, -1);
        enum_refinements(active, prev, blk, 0, 0, [&](int) {
            levels.push_back(blk);
            chains(level + 1, maxd);
            levels.pop_back();
        });
    };
    std::function<void(int)> depths = [&](int x) {
        if (x == k) {
            int maxd = 0;
            for (int d : delta) maxd = std::max(maxd, d);
            chains(0, maxd);
            return;
        }
        for (int d = 0; d <= max_depth; d++) {
            delta[x] = d;
            depths(x + 1);
        }
    };
    depths(0);
}

// --- three-valued literal evaluation ------------------------------------------

enum class Tri : uint8_t { T, F, U };

struct AtomRes {
    Tri t;
    int node = -1;
    uint32_t mark = 0;
};

using MarkEnv = std::map<std::pair<int, uint32_t>, bool>;

AtomRes lookup(const MarkEnv& env, int node, uint32_t mark) {
    auto it = env.find({node, mark});
    if (it == env.end()) return {Tri::U, node, mark};
    return {it->second ? Tri::T : Tri::F};
}

AtomRes eval_atom(const Formula& a, const Skeleton& sk,
                  const std::map<std::string, int>& varidx, const MarkEnv& env) {
    auto node_of = [&](const Term& t) {
        auto it = varidx.find(t->var);
        if (it == varidx.end()) fail("UnknownSymbol", "unbound variable " + t->var);
        return sk.anchor[it->second];
    };
    if (a->k == FormulaNode::K::False) return {Tri::F};
    if (a->k == FormulaNode::K::Eq)
        return {node_of(a->args[0]) == node_of(a->args[1]) ? Tri::T : Tri::F};
    if (a->args.size() == 1) return lookup(env, node_of(a->args[0]), mark_id(a->rel));
    if (a->args.size() != 2) fail("SyntaxError", "relation arity beyond 2");
    int u = node_of(a->args[0]), v = node_of(a->args[1]);
    if (sk.anc_or_self(u, v)) return lookup(env, v, mark_id(in_mark(a->rel, sk.depth[u])));
    if (sk.anc_or_self(v, u)) return lookup(env, u, mark_id(out_mark(a->rel, sk.depth[v])));
    return {Tri::F};
}

// --- canonicalization -----------------------------------------------------------

std::string canonicalize(LabelledShape& ls) {
    const Shape& sh = ls.shape;
    std::vector<std::vector<int>> kids(sh.n);
    std::vector<int> roots;
    for (int v = 0; v < sh.n; v++) {
        if (sh.parent[v] == v)
            roots.push_back(v);
        else
            kids[sh.parent[v]].push_back(v);
    }
    std::vector<std::vector<int>> anch(sh.n);
    for (size_t x = 0; x < sh.anchor.size(); x++) anch[sh.anchor[x]].push_back((int)x);

    std::vector<std::string> enc(sh.n);
    std::function<void(int)> encode = [&](int v) {
        for (int c : kids[v]) encode(c);
        std::sort(kids[v].begin(), kids[v].end(),
                  [&](int a, int b) { return enc[a] < enc[b]; });
        std::ostringstream os;
        os << '(';
        for (uint32_t m : sh.marks[v]) os << 'm' << m << ',';
        os << '|';
        for (uint32_t m : sh.neg_marks[v]) os << 'n' << m << ',';
        os << '|';
        for (const auto& w : ls.lambda[v]) os << w << ',';
        os << '|';
        for (int x : anch[v]) os << 'x' << x << ',';
        for (int c : kids[v]) os << enc[c];
        os << ')';
        enc[v] = os.str();
    };
    for (int r : roots) encode(r);
    std::sort(roots.begin(), roots.end(), [&](int a, int b) { return enc[a] < enc[b]; });

    LabelledShape out;
    out.shape.n = sh.n;
    out.shape.anchor.assign(sh.anchor.size(), -1);
    std::vector<int> newid(sh.n, -1);
    std::function<void(int, int)> emit = [&](int v, int par) {
        int id = (int)out.shape.parent.size();
        newid[v] = id;
        out.shape.parent.push_back(par < 0 ? id : par);
        out.shape.depth.push_back(sh.depth[v]);
        out.shape.marks.push_back(sh.marks[v]);
        out.shape.neg_marks.push_back(sh.neg_marks[v]);
        out.lambda.push_back(ls.lambda[v]);
        for (int c : kids[v]) emit(c, id);
    };
    for (int r : roots) emit(r, -1);
    for (size_t x = 0; x < sh.anchor.size(); x++) out.shape.anchor[x] = newid[sh.anchor[x]];

    std::ostringstream key;
    for (int r : roots) key << enc[r];
    key << '#';
    for (size_t x = 0; x < sh.anchor.size(); x++) key << out.shape.anchor[x] << ',';
    ls = std::move(out);
    return key.str();
}

} // namespace

std::vector<ShapePart> decompose_basic(const Expr& e, const std::vector<std::string>& vars,
                                       int max_depth) {
    std::map<std::string, int> varidx;
    for (size_t i = 0; i < vars.size(); i++) varidx[vars[i]] = (int)i;
    for (const auto& v : free_vars(e))
        if (!varidx.count(v)) fail("UnknownSymbol", "free variable " + v + " not listed");

    auto products = expand_products(e);
    int k = (int)vars.size();

    std::map<std::string, size_t> seen; // canonical key -> index into out
    std::vector<ShapePart> out;
    auto emit = [&](const Product& p, const Skeleton& sk, const MarkEnv& env) {
        ShapePart part;
        part.consts = p.consts;
        std::sort(part.consts.begin(), part.consts.end(),
                  [](const Num& a, const Num& b) { return num_cmp(a, b) < 0; });
        Shape& sh = part.ls.shape;
        sh.n = sk.n;
        sh.parent = sk.parent;
        sh.depth = sk.depth;
        sh.anchor = sk.anchor;
        sh.marks.assign(sk.n, {});
        sh.neg_marks.assign(sk.n, {});
        part.ls.lambda.assign(sk.n, {});
        for (const auto& [at, pos] : env)
            (pos ? sh.marks : sh.neg_marks)[at.first].push_back(at.second);
        for (auto& ms : sh.marks) std::sort(ms.begin(), ms.end());
        for (auto& ms : sh.neg_marks) std::sort(ms.begin(), ms.end());
        for (const auto& [sym, var] : p.weights)
            part.ls.lambda[sk.anchor[varidx.at(var)]].push_back(sym);
        for (auto& ws : part.ls.lambda) std::sort(ws.begin(), ws.end());

        std::string key = canonicalize(part.ls);
        key += '#';
        for (const auto& c : part.consts) key += num_str(c) + ",";
        auto [it, fresh] = seen.insert({key, out.size()});
        if (fresh)
            out.push_back(std::move(part));
        else
            out[it->second].mult += part.mult;
    };

    for (const auto& p : products) {
        enum_skeletons(k, max_depth, [&](const Skeleton& sk) {
            // branch on undetermined mark atoms; branches are exclusive and
            // exhaustive over the embeddings of this skeleton
            std::vector<MarkEnv> stack{{}};
            while (!stack.empty()) {
                MarkEnv env = std::move(stack.back());
                stack.pop_back();
                bool dead = false, branched = false;
                for (const auto& [atom, neg] : p.lits) {
                    AtomRes r = eval_atom(atom, sk, varidx, env);
                    if (r.t == Tri::U) {
                        MarkEnv pos = env, negenv = env;
                        pos[{r.node, r.mark}] = true;
                        negenv[{r.node, r.mark}] = false;
                        stack.push_back(std::move(pos));
                        stack.push_back(std::move(negenv));
                        branched = true;
                        break;
                    }
                    if ((r.t == Tri::T) == neg) {
                        dead = true;
                        break;
                    }
                }
                if (!dead && !branched) emit(p, sk, env);
            }
        });
    }
    return out;
}

Value shapes_brute_eval(const std::vector<ShapePart>& parts, const LabelledForest& f,
                        const std::function<Value(const std::string&, int)>& weight,
                        const Semiring& sr) {
    std::vector<std::vector<int>> kids(f.n);
    std::vector<int> roots;
    for (int v = 0; v < f.n; v++) {
        if (f.parent[v] == v)
            roots.push_back(v);
        else
            kids[f.parent[v]].push_back(v);
    }
    Value total = sr->zero;
    for (const auto& part : parts) {
        const Shape& sh = part.ls.shape;
        Value acc = sr->zero;
        std::vector<int> img(sh.n, -1);
        std::vector<char> used(f.n, 0);
        std::function<void(int, const Value&)> rec = [&](int s, const Value& run) {
            if (s == sh.n) {
                acc = sr->add(acc, run);
                return;
            }
            const std::vector<int>& cands = sh.parent[s] == s ? roots : kids[img[sh.parent[s]]];
            for (int v : cands) {
                if (used[v] || f.depth[v] != sh.depth[s]) continue;
                bool ok = true;
                for (uint32_t m : sh.marks[s])
                    if (!f.has_mark(v, m)) { ok = false; break; }
                for (uint32_t m : sh.neg_marks[s])
                    if (f.has_mark(v, m)) { ok = false; break; }
                if (!ok) continue;
                Value next = run;
                for (const auto& sym : part.ls.lambda[s]) next = sr->mul(next, weight(sym, v));
                used[v] = 1;
                img[s] = v;
                rec(s + 1, next);
                used[v] = 0;
                img[s] = -1;
            }
        };
        rec(0, sr->one);
        for (const auto& c : part.consts) acc = sr->mul(acc, sr->from_num(c));
        for (long long i = 0; i < part.mult; i++) total = sr->add(total, acc);
    }
    return total;
}

} // namespace semicirc

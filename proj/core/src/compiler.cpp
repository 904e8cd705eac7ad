#include "semicirc/compiler.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numeric>
#include <sstream>

namespace semicirc {

namespace {

std::string arc_rel(int t) { return "@arc:" + std::to_string(t); }

std::string tstr(const std::vector<int>& ts) {
    std::string out;
    for (size_t i = 0; i < ts.size(); i++) out += (i ? "." : "") + std::to_string(ts[i]);
    return out;
}

std::string urel_name(const std::string& rel, int i, const std::vector<int>& ts) {
    return "@u:" + rel + ":" + std::to_string(i) + ":" + tstr(ts);
}
std::string uweight_name(const std::string& w, int i, const std::vector<int>& ts) {
    return "@w:" + w + ":" + std::to_string(i) + ":" + tstr(ts);
}

// orientation branches of a k-ary atom: source position i (holding the first
// occurrence of the tuple's orientation source) plus an out-neighbor index per
// position; index d+1 means "equals the source"
struct OBranch {
    int i = 0;
    std::vector<int> ts;
};

std::vector<OBranch> atom_branches(int k, int d) {
    std::vector<OBranch> out;
    for (int i = 0; i < k; i++) {
        std::vector<int> ts(k, 0);
        ts[i] = d + 1;
        std::function<void(int)> rec = [&](int j) {
            if (j == k) {
                out.push_back({i, ts});
                return;
            }
            if (j == i) {
                rec(j + 1);
                return;
            }
            int hi = j < i ? d : d + 1; // the source may not recur before i
            for (int t = 1; t <= hi; t++) {
                ts[j] = t;
                rec(j + 1);
            }
        };
        rec(0);
    }
    return out;
}

struct UnifyCtx {
    const WeightedStructure* base = nullptr;
    UnifyReduced* out = nullptr;
    int d = 0;
    std::map<std::pair<int, int>, int> arcidx; // (a,b) -> out-neighbor index of b at a
    std::set<std::string> materialized;        // relations/weights already translated

    // canonical branch of a concrete tuple; nullopt when not orientation-covered
    std::optional<OBranch> canon_branch(const Tuple& a) const {
        int k = (int)a.size();
        for (int i = 0; i < k; i++) {
            bool first = true;
            for (int j = 0; j < i; j++)
                if (a[j] == a[i]) first = false;
            if (!first) continue;
            OBranch b{i, std::vector<int>(k, 0)};
            bool ok = true;
            for (int j = 0; j < k && ok; j++) {
                if (a[j] == a[i]) {
                    b.ts[j] = d + 1;
                } else {
                    auto it = arcidx.find({a[i], a[j]});
                    if (it == arcidx.end())
                        ok = false;
                    else
                        b.ts[j] = it->second;
                }
            }
            if (ok) return b;
        }
        return std::nullopt;
    }

    void ensure_relation(const std::string& rel) {
        if (!materialized.insert("R:" + rel).second) return;
        std::vector<Tuple> tuples;
        if (rel.rfind("@graph:", 0) == 0) {
            if (const auto* m = base->fun_entries(rel.substr(7))) {
                for (const auto& [args, img] : *m) {
                    Tuple t = args;
                    t.push_back(img);
                    tuples.push_back(std::move(t));
                }
            }
        } else {
            tuples = base->tuples(rel);
        }
        for (const auto& t : tuples) {
            auto b = canon_branch(t);
            if (!b) fail("GaifmanViolation", "tuple of " + rel + " not orientation-covered");
            std::string name = urel_name(rel, b->i, b->ts);
            if (!out->s.sig.find_relation(name)) out->s.sig.add_relation(name, 1);
            out->s.add_tuple(name, {t[b->i]});
        }
    }

    void register_urel(const std::string& name) {
        if (!out->s.sig.find_relation(name)) out->s.sig.add_relation(name, 1);
    }

    void ensure_weight(const std::string& w, int k) {
        if (!materialized.insert("W:" + w).second) return;
        const Orientation& o = out->orient;
        for (const auto& b : atom_branches(k, d)) {
            std::string name = uweight_name(w, b.i, b.ts);
            out->s.sig.add_weight(name, 1);
            out->weight_map[name] = {w, b.ts};
            for (int a = 0; a < base->n(); a++) {
                Tuple t;
                bool ok = true;
                for (int j = 0; j < k && ok; j++) {
                    int u = o.apply(a, b.ts[j]);
                    if (u < 0)
                        ok = false;
                    else
                        t.push_back(u);
                }
                if (!ok) continue;
                Value v = base->weight(w, t);
                if (!base->semiring->is_zero(v)) out->s.set_weight(name, {a}, v);
            }
        }
    }

    // conditions tying positions to the source variable
    std::vector<Formula> branch_conds(const OBranch& b, const std::vector<Term>& args) const {
        std::vector<Formula> conds;
        for (size_t j = 0; j < args.size(); j++) {
            if ((int)j == b.i) continue;
            if (b.ts[j] == d + 1)
                conds.push_back(f_eq(args[j], args[b.i]));
            else
                conds.push_back(f_rel(arc_rel(b.ts[j]), {args[b.i], args[j]}));
        }
        return conds;
    }

    Expr rewrite(const Expr& e) {
        switch (e->k) {
            case ExprNode::K::Const:
                return e;
            case ExprNode::K::Weight: {
                int k = (int)e->args.size();
                if (k <= 1) return e;
                ensure_weight(e->wsym, k);
                std::vector<Expr> terms;
                for (const auto& b : atom_branches(k, d)) {
                    std::vector<Expr> fac;
                    for (const auto& cnd : branch_conds(b, e->args)) fac.push_back(e_bracket(cnd));
                    fac.push_back(e_weight(uweight_name(e->wsym, b.i, b.ts), {e->args[b.i]}));
                    terms.push_back(e_mul(std::move(fac)));
                }
                return e_add(std::move(terms));
            }
            case ExprNode::K::Bracket: {
                Formula f = e->bracket;
                bool neg = f->k == FormulaNode::K::Not;
                Formula atom = neg ? f->kids[0] : f;
                if (atom->k != FormulaNode::K::Rel || atom->args.size() <= 1) return e;
                int k = (int)atom->args.size();
                ensure_relation(atom->rel);
                // branches are mutually exclusive: the orientation is acyclic
                // and out-neighbors are distinct, so a tuple fires at most one
                std::vector<Expr> terms;
                for (const auto& b : atom_branches(k, d)) {
                    std::string uname = urel_name(atom->rel, b.i, b.ts);
                    register_urel(uname);
                    std::vector<Formula> conj{f_rel(uname, {atom->args[b.i]})};
                    for (auto& cnd : branch_conds(b, atom->args)) conj.push_back(std::move(cnd));
                    if (neg) {
                        terms.push_back(e_bracket(f_not(f_and(std::move(conj)))));
                    } else {
                        std::vector<Expr> fac;
                        for (auto& cnd : conj) fac.push_back(e_bracket(std::move(cnd)));
                        terms.push_back(e_mul(std::move(fac)));
                    }
                }
                return neg ? e_mul(std::move(terms)) : e_add(std::move(terms));
            }
            case ExprNode::K::Add:
            case ExprNode::K::Mul: {
                std::vector<Expr> kids;
                for (const auto& kd : e->kids) kids.push_back(rewrite(kd));
                return e->k == ExprNode::K::Add ? e_add(std::move(kids)) : e_mul(std::move(kids));
            }
            case ExprNode::K::Sum:
                return e_sum(e->var, rewrite(e->kids[0]));
        }
        fail("SyntaxError", "unknown expression node");
    }
};

} // namespace

std::optional<InputKey> UnifyReduced::key_of(const std::string& sym, int v) const {
    auto it = weight_map.find(sym);
    if (it == weight_map.end()) return InputKey{sym, {v}};
    Tuple t;
    for (int idx : it->second.second) {
        int u = orient.apply(v, idx);
        if (u < 0) return std::nullopt;
        t.push_back(u);
    }
    return InputKey{it->second.first, std::move(t)};
}

UnifyReduced unify_reduce(const WeightedStructure& s, const Expr& e) {
    UnifyReduced out;
    out.s = s;
    out.orient = degeneracy_orient(gaifman_graph(s));
    UnifyCtx cx;
    cx.base = &s;
    cx.out = &out;
    cx.d = out.orient.d;
    for (int t = 1; t <= cx.d; t++)
        if (!out.s.sig.find_relation(arc_rel(t))) out.s.sig.add_relation(arc_rel(t), 2);
    for (int v = 0; v < s.n(); v++)
        for (int i = 0; i < out.orient.outdeg(v); i++) {
            out.s.add_tuple(arc_rel(i + 1), {v, out.orient.out[v][i]});
            cx.arcidx[{v, out.orient.out[v][i]}] = i + 1;
        }
    out.e = cx.rewrite(e);
    return out;
}

std::vector<Block> normalize_blocks(const Expr& e) {
    switch (e->k) {
        case ExprNode::K::Const:
        case ExprNode::K::Weight:
        case ExprNode::K::Bracket:
            return {{{}, e}};
        case ExprNode::K::Add: {
            std::vector<Block> out;
            for (const auto& k : e->kids) {
                auto bs = normalize_blocks(k);
                out.insert(out.end(), bs.begin(), bs.end());
            }
            return out;
        }
        case ExprNode::K::Sum: {
            auto bs = normalize_blocks(e->kids[0]);
            for (auto& b : bs) b.vars.insert(b.vars.begin(), e->var);
            return bs;
        }
        case ExprNode::K::Mul: {
            // seed with an empty body rather than a literal 1: the number 1 is
            // not the multiplicative identity in every semiring
            std::vector<Block> out{{{}, Expr{}}};
            for (const auto& k : e->kids) {
                auto bs = normalize_blocks(k);
                std::vector<Block> next;
                for (const auto& a : out)
                    for (const auto& b : bs) {
                        Block m = a;
                        m.vars.insert(m.vars.end(), b.vars.begin(), b.vars.end());
                        m.body = m.body ? e_mul({m.body, b.body}) : b.body;
                        next.push_back(std::move(m));
                    }
                out = std::move(next);
            }
            for (auto& b : out)
                if (!b.body) b.body = e_bracket(f_true());
            return out;
        }
    }
    fail("SyntaxError", "unknown expression node");
}

std::string color_rel(int c) { return "@color:" + std::to_string(c); }

std::pair<WeightedStructure, std::vector<ColorPart>> color_split(const WeightedStructure& s,
                                                                 const Block& block,
                                                                 const LtdColoring& coloring) {
    if (block.vars.empty()) fail("SyntaxError", "color_split needs a block with variables");
    WeightedStructure sC = s;
    for (int c = 0; c < coloring.palette; c++)
        if (!sC.sig.find_relation(color_rel(c))) sC.sig.add_relation(color_rel(c), 1);
    for (int v = 0; v < s.n(); v++) sC.add_tuple(color_rel(coloring.color[v]), {v});

    int k = (int)block.vars.size();
    std::vector<ColorPart> parts;
    for (const auto& [D, cert] : coloring.certificates) {
        (void)cert;
        if ((int)D.size() > k) continue;
        ColorPart part;
        part.colors = D;
        for (int v = 0; v < s.n(); v++)
            for (int c : D)
                if (coloring.color[v] == c) part.verts.push_back(v);
        if (part.verts.empty()) continue;
        std::vector<Expr> terms;
        std::vector<int> pick(k, 0);
        std::function<void(int)> rec = [&](int j) {
            if (j == k) {
                std::vector<char> hit(D.size(), 0);
                for (int x : pick) hit[x] = 1;
                for (char h : hit)
                    if (!h) return; // not surjective onto D
                std::vector<Expr> fac;
                for (int x = 0; x < k; x++)
                    fac.push_back(e_bracket(f_rel(color_rel(D[pick[x]]), {term_var(block.vars[x])})));
                fac.push_back(block.body);
                terms.push_back(e_mul(std::move(fac)));
                return;
            }
            for (size_t c = 0; c < D.size(); c++) {
                pick[j] = (int)c;
                rec(j + 1);
            }
        };
        rec(0);
        if (terms.empty()) continue;
        part.body = e_add(std::move(terms));
        parts.push_back(std::move(part));
    }
    return {sC, parts};
}

static long long g_ids = 0, g_scan = 0, g_geval = 0, g_runs = 0;

uint32_t compile_forest(Circuit& c, const LabelledForest& f, const std::vector<ShapePart>& parts,
                        const std::function<std::optional<InputKey>(const std::string&, int)>& key_of,
                        const std::vector<int>& vertex_ids, const std::vector<int>& refine) {
    std::vector<std::vector<int>> kids(f.n);
    std::vector<int> roots;
    for (int v = 0; v < f.n; v++) {
        if (f.parent[v] == v)
            roots.push_back(v);
        else
            kids[f.parent[v]].push_back(v);
    }
    auto vid = [&](int v) { return vertex_ids.empty() ? v : vertex_ids[v]; };

    // vertices carrying each mark: candidate enumeration starts from a node's
    // rarest required mark instead of scanning whole sibling lists, so dead
    // shapes cost almost nothing
    std::unordered_map<uint32_t, std::vector<int>> by_mark;
    for (int v = 0; v < f.n; v++)
        for (uint32_t m : f.marks[v]) by_mark[m].push_back(v);

    std::vector<uint32_t> rmark;
    for (int col : refine) rmark.push_back(mark_id(color_rel(col)));

    // flat (shape node, vertex) memo shared across runs via epoch stamping:
    // far cheaper than a hash map at this call volume
    std::vector<uint32_t> memo_val, memo_stamp;
    uint32_t epoch = 0;

    std::vector<uint32_t> terms;
    for (const auto& part : parts) {
        const Shape& sh = part.ls.shape;

        // no embedding can exist unless every required mark occurs in the forest
        bool viable = true;
        for (int r = 0; r < sh.n && viable; r++)
            for (uint32_t m : sh.marks[r])
                if (!by_mark.count(m)) { viable = false; break; }
        if (!viable) continue;

        std::vector<int> anchors = sh.anchor;
        std::sort(anchors.begin(), anchors.end());
        anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
        if (anchors.size() < refine.size()) continue;

        std::vector<std::vector<int>> skids(sh.n);
        std::vector<int> sroots;
        for (int r = 0; r < sh.n; r++) {
            if (sh.parent[r] == r)
                sroots.push_back(r);
            else
                skids[sh.parent[r]].push_back(r);
        }

        // required color mark per node under the current anchor assignment
        std::vector<uint32_t> acolor(sh.n, 0);

        size_t need = (size_t)sh.n * f.n;
        if (memo_val.size() < need) {
            memo_val.resize(need);
            memo_stamp.resize(need, 0);
        }

        auto run = [&]() {
            g_runs++;
            epoch++;

            // candidate vertices for shape node s below forest parent pv (-1: roots)
            auto cands_of = [&](int s, int pv) {
                const std::vector<int>& sib = pv < 0 ? roots : kids[pv];
                const std::vector<int>* best = nullptr;
                auto consider = [&](uint32_t m) {
                    auto it = by_mark.find(m);
                    if (it == by_mark.end()) return false;
                    if (!best || it->second.size() < best->size()) best = &it->second;
                    return true;
                };
                for (uint32_t m : sh.marks[s])
                    if (!consider(m)) return std::vector<int>{};
                if (acolor[s] && !consider(acolor[s])) return std::vector<int>{};
                // filter by all marks up front: rejected vertices never reach
                // build, so they cost no memo entry and no perm column
                auto all_marks = [&](int v) {
                    if (acolor[s] && !f.has_mark(v, acolor[s])) return false;
                    for (uint32_t m : sh.marks[s])
                        if (!f.has_mark(v, m)) return false;
                    for (uint32_t m : sh.neg_marks[s])
                        if (f.has_mark(v, m)) return false;
                    return true;
                };
                std::vector<int> out;
                if (!best || best->size() >= sib.size()) {
                    for (int v : sib)
                        if (f.depth[v] == sh.depth[s] && all_marks(v)) out.push_back(v);
                } else {
                    for (int v : *best) {
                        if (f.depth[v] != sh.depth[s]) continue;
                        if (pv < 0 ? f.parent[v] != v : f.parent[v] != pv) continue;
                        if (all_marks(v)) out.push_back(v);
                    }
                }
                return out;
            };

            // Perm over a row set of shape nodes against the union of each
            // row's candidates; all-zero columns are dropped (they can never
            // be chosen injectively)
            std::function<uint32_t(int, int)> build;
            auto perm_of = [&](const std::vector<int>& rows, int pv) {
                std::vector<int> cands;
                for (int rr : rows) {
                    auto cs = cands_of(rr, pv);
                    cands.insert(cands.end(), cs.begin(), cs.end());
                }
                std::sort(cands.begin(), cands.end());
                cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
                std::vector<std::vector<uint32_t>> cols;
                for (int u : cands) {
                    std::vector<uint32_t> col;
                    bool nz = false;
                    for (int rr : rows) {
                        uint32_t g = build(rr, u);
                        nz = nz || !c.is_const_zero(g);
                        col.push_back(g);
                    }
                    if (nz) cols.push_back(std::move(col));
                }
                if (cols.size() < rows.size()) return c.const_zero();
                std::vector<uint32_t> entries(rows.size() * cols.size());
                for (size_t ri = 0; ri < rows.size(); ri++)
                    for (size_t ci = 0; ci < cols.size(); ci++)
                        entries[ri * cols.size() + ci] = cols[ci][ri];
                return c.perm((int)rows.size(), (int)cols.size(), std::move(entries));
            };
            build = [&](int r, int v) -> uint32_t {
                size_t key = (size_t)r * f.n + v;
                if (memo_stamp[key] == epoch) return memo_val[key];
                g_geval++;
                uint32_t res;
                bool ok = f.depth[v] == sh.depth[r];
                if (ok && acolor[r]) ok = f.has_mark(v, acolor[r]);
                if (ok)
                    for (uint32_t m : sh.marks[r])
                        if (!f.has_mark(v, m)) { ok = false; break; }
                if (ok)
                    for (uint32_t m : sh.neg_marks[r])
                        if (f.has_mark(v, m)) { ok = false; break; }
                if (!ok) {
                    res = c.const_zero();
                } else {
                    std::vector<uint32_t> factors;
                    for (const auto& sym : part.ls.lambda[r]) {
                        auto ik = key_of(sym, vid(v));
                        if (!ik) { ok = false; break; }
                        factors.push_back(c.input(*ik));
                    }
                    if (ok && !skids[r].empty()) factors.push_back(perm_of(skids[r], v));
                    res = ok ? c.mul_chain(factors) : c.const_zero();
                    if (factors.empty() && ok) res = c.const_one();
                }
                memo_stamp[key] = epoch;
                memo_val[key] = res;
                return res;
            };

            uint32_t topg = sroots.empty() ? c.const_one() : perm_of(sroots, -1);
            if (c.is_const_zero(topg)) return;
            std::vector<uint32_t> factors{topg};
            for (const Num& cc : part.consts) factors.push_back(c.constant(cc));
            uint32_t pg = c.mul_chain(factors);
            if (c.is_const_zero(pg)) return;
            for (long long i = 0; i < part.mult; i++) terms.push_back(pg);
        };

        if (refine.empty()) {
            run();
            continue;
        }
        // every surjective assignment of the refine colors onto the anchors
        std::vector<int> pick(anchors.size(), 0);
        std::function<void(size_t)> rec = [&](size_t j) {
            if (j == anchors.size()) {
                std::vector<char> hit(refine.size(), 0);
                for (int x : pick) hit[x] = 1;
                for (char h : hit)
                    if (!h) return;
                for (size_t t = 0; t < anchors.size(); t++) acolor[anchors[t]] = rmark[pick[t]];
                run();
                for (int a : anchors) acolor[a] = 0;
                return;
            }
            for (size_t cc = 0; cc < refine.size(); cc++) {
                pick[j] = (int)cc;
                rec(j + 1);
            }
        };
        rec(0);
    }
    return c.add(terms);
}

namespace {

void collect_rels(const Formula& f, std::set<std::string>& un, std::set<std::string>& bin) {
    if (f->k == FormulaNode::K::Rel) {
        if (f->args.size() == 1)
            un.insert(f->rel);
        else if (f->args.size() == 2)
            bin.insert(f->rel);
        else
            fail("SyntaxError", "atom arity beyond 2 after sparsity reduction");
    }
    for (const auto& k : f->kids) collect_rels(k, un, bin);
}

void collect_rels(const Expr& e, std::set<std::string>& un, std::set<std::string>& bin) {
    if (e->k == ExprNode::K::Bracket) collect_rels(e->bracket, un, bin);
    for (const auto& k : e->kids) collect_rels(k, un, bin);
}

// relational slice seen by the shape layer: marks for the body's unary atoms
// (plus color classes when splitting), pair lists for its binary atoms
BinaryStructure make_bs(const WeightedStructure& s, const Expr& body,
                        const std::vector<int>& verts, const std::vector<int>* color) {
    std::set<std::string> un, bin;
    collect_rels(body, un, bin);
    std::vector<int> pos(s.n(), -1);
    for (size_t i = 0; i < verts.size(); i++) pos[verts[i]] = (int)i;
    BinaryStructure bs;
    bs.n = (int)verts.size();
    bs.unary.assign(bs.n, {});
    for (const auto& rel : un)
        for (const auto& t : s.tuples(rel))
            if (pos[t[0]] >= 0) bs.unary[pos[t[0]]].push_back(mark_id(rel));
    if (color)
        for (size_t i = 0; i < verts.size(); i++)
            bs.unary[i].push_back(mark_id(color_rel((*color)[verts[i]])));
    for (const auto& rel : bin) {
        std::vector<std::pair<int, int>> pairs;
        for (const auto& t : s.tuples(rel))
            if (pos[t[0]] >= 0 && pos[t[1]] >= 0) pairs.push_back({pos[t[0]], pos[t[1]]});
        bs.binary.push_back({rel, std::move(pairs)});
    }
    return bs;
}

} // namespace

Value CompiledQuery::eval_on(const WeightedStructure& s, const Semiring& sr) {
    std::set<std::string> probes(probe_syms.begin(), probe_syms.end());
    circuit.evaluate(
        [&](const InputKey& k) {
            if (probes.count(k.sym)) return sr->zero;
            return s.weight(k.sym, k.tuple);
        },
        sr);
    return circuit.out_value();
}

Value CompiledQuery::probe(const Tuple& a) {
    if (!circuit.evaluated()) fail("TypeMismatch", "probe requires an evaluated circuit");
    if (a.size() != probe_syms.size()) fail("ArityMismatch", "probe tuple arity mismatch");
    const Semiring& sr = circuit.bound_semiring();
    for (size_t i = 0; i < a.size(); i++) {
        InputKey key{probe_syms[i], {a[i]}};
        if (circuit.has_input(key)) circuit.update_input(key, sr->one);
    }
    Value out = circuit.out_value();
    for (size_t i = 0; i < a.size(); i++) {
        InputKey key{probe_syms[i], {a[i]}};
        if (circuit.has_input(key)) circuit.update_input(key, sr->zero);
    }
    return out;
}

CompiledQuery compile(const WeightedStructure& s, const Expr& f, const CompileOptions& opt) {
    if (!free_vars(f).empty())
        fail("SyntaxError", "compile requires a closed expression; use the probe interface");
    Expr e1 = simplify(f, s.sig);
    UnifyReduced ur = unify_reduce(s, e1);
    Expr e2 = simplify(ur.e, ur.s.sig);
    auto blocks = normalize_blocks(e2);
    {
        // sum_V b1 + sum_V b2 = sum_V (b1 + b2): merging blocks over the same
        // variable set lets their shape decompositions dedup against each other
        // and shares one forest encoding per color part
        std::vector<Block> merged;
        std::map<std::vector<std::string>, size_t> at;
        for (auto& b : blocks) {
            std::vector<std::string> key = b.vars;
            std::sort(key.begin(), key.end());
            auto [it, fresh] = at.insert({std::move(key), merged.size()});
            if (fresh)
                merged.push_back(std::move(b));
            else {
                Block& m = merged[it->second];
                m.body = e_add({m.body, b.body});
            }
        }
        blocks = std::move(merged);
    }
    Graph g = gaifman_graph(ur.s);

    auto t_last = std::chrono::steady_clock::now();
    auto tick = [&](const char* what) {
        if (!std::getenv("SEMICIRC_TIMING")) return;
        auto now = std::chrono::steady_clock::now();
        std::cerr << "# " << what << " "
                  << std::chrono::duration<double, std::milli>(now - t_last).count() << "ms\n";
        t_last = now;
    };
    tick("front");

    CompiledQuery q;
    q.closed = e1;
    Circuit& c = q.circuit;
    auto key_of = [&ur](const std::string& sym, int v) { return ur.key_of(sym, v); };

    std::map<int, LtdColoring> colorings;
    std::optional<ElimForest> whole;
    std::vector<uint32_t> top;
    std::ostringstream part_log, shape_log;

    for (const auto& b : blocks) {
        int k = (int)b.vars.size();
        if (k == 0) {
            auto shapes = decompose_basic(b.body, {}, 0);
            top.push_back(compile_forest(c, LabelledForest{}, shapes, key_of, {}));
            shape_log << "block(0 vars): " << shapes.size() << " shapes\n";
            continue;
        }
        bool single = false;
        // the whole-forest shortcut only ever pays off on small structures,
        // and computing the elimination forest on a large graph is not free
        if (opt.p == 0 && s.n() <= 4 * opt.single_part_budget) {
            if (!whole) whole = elimination_forest(g);
            double cost = std::pow((double)whole->depth + 1, k);
            single = cost <= (double)opt.single_part_budget;
        }
        if (single) {
            std::vector<int> verts(s.n());
            std::iota(verts.begin(), verts.end(), 0);
            BinaryStructure bs = make_bs(ur.s, b.body, verts, nullptr);
            LabelledForest forest = encode_bounded_td(bs, *whole);
            auto shapes = decompose_basic(b.body, b.vars, forest.max_depth);
            top.push_back(compile_forest(c, forest, shapes, key_of, verts));
            part_log << "block: whole-forest depth " << forest.max_depth << "\n";
            shape_log << "block(" << k << " vars): " << shapes.size() << " shapes\n";
        } else {
            int p = std::max(k, opt.p);
            auto cit = colorings.find(p);
            if (cit == colorings.end())
                cit = colorings
                          .emplace(p, low_treedepth_coloring(g, p, opt.seed, true, opt.depth_cap))
                          .first;
            const LtdColoring& col = cit->second;
            tick("coloring");

            struct Prep {
                const std::vector<int>* D;
                std::vector<int> verts;
                LabelledForest forest;
            };
            std::vector<Prep> preps;
            int maxdepth = 0;
            for (const auto& [D, cert] : col.certificates) {
                if ((int)D.size() > k) continue;
                Prep pr;
                pr.D = &D;
                std::vector<char> in(col.palette, 0);
                for (int cc : D) in[cc] = 1;
                for (int v = 0; v < s.n(); v++)
                    if (in[col.color[v]]) pr.verts.push_back(v);
                if (pr.verts.empty()) continue;
                std::vector<int> pos(s.n(), -1);
                for (size_t i = 0; i < pr.verts.size(); i++) pos[pr.verts[i]] = (int)i;
                ElimForest sk;
                sk.parent.resize(pr.verts.size());
                for (size_t i = 0; i < pr.verts.size(); i++) {
                    int par = cert.parent[pr.verts[i]];
                    sk.parent[i] = par < 0 ? -1 : pos[par];
                }
                BinaryStructure bs = make_bs(ur.s, b.body, pr.verts, &col.color);
                pr.forest = encode_bounded_td(bs, sk);
                maxdepth = std::max(maxdepth, pr.forest.max_depth);
                preps.push_back(std::move(pr));
            }
            tick("preps");
            auto base = decompose_basic(b.body, b.vars, maxdepth);
            tick("decompose");
            shape_log << "block(" << k << " vars): " << base.size() << " base shapes, palette "
                      << col.palette << "\n";
            for (const auto& pr : preps) {
                top.push_back(compile_forest(c, pr.forest, base, key_of, pr.verts, *pr.D));
                part_log << "part {" << tstr(*pr.D) << "}: " << pr.verts.size()
                         << " vertices, depth " << pr.forest.max_depth << "\n";
            }
            tick("forests");
            if (std::getenv("SEMICIRC_TIMING"))
                std::cerr << "# ids " << g_ids << " scan " << g_scan << " geval " << g_geval
                          << " runs " << g_runs << "\n";
            g_ids = g_scan = g_geval = g_runs = 0;
        }
    }
    c.output = c.add(top);

    if (opt.keep_stages) {
        std::ostringstream bl;
        for (const auto& b : blocks) {
            bl << "sum";
            for (const auto& v : b.vars) bl << " " << v;
            bl << " . " << expr_str(b.body) << "\n";
        }
        q.stages = {{"simplify", expr_str(e1)},
                    {"reduce", expr_str(e2)},
                    {"blocks", bl.str()},
                    {"parts", part_log.str()},
                    {"shapes", shape_log.str()},
                    {"circuit", c.dump()}};
    }
    return q;
}

CompiledQuery compile_open(const WeightedStructure& s, const Expr& f, const CompileOptions& opt) {
    auto fv = free_vars(f);
    if (fv.empty()) fail("SyntaxError", "compile_open requires free variables");
    WeightedStructure s2 = s;
    std::vector<std::string> vars(fv.begin(), fv.end());
    std::vector<std::string> syms;
    std::vector<Expr> fac{f};
    for (size_t i = 0; i < vars.size(); i++) {
        std::string sym = "@probe:" + std::to_string(i);
        syms.push_back(sym);
        s2.sig.add_weight(sym, 1);
        fac.push_back(e_weight(sym, {term_var(vars[i])}));
    }
    Expr closed = e_mul(std::move(fac));
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) closed = e_sum(*it, closed);
    CompiledQuery q = compile(s2, closed, opt);
    q.probe_vars = vars;
    q.probe_syms = syms;
    return q;
}

} // namespace semicirc

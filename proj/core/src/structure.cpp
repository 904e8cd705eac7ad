#include "semicirc/structure.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace semicirc {

// --- Signature --------------------------------------------------------------

static const Signature::Sym* find_in(const std::vector<Signature::Sym>& v, const std::string& n) {
    for (const auto& s : v)
        if (s.name == n) return &s;
    return nullptr;
}

const Signature::Sym* Signature::find_relation(const std::string& n) const { return find_in(relations, n); }
const Signature::Sym* Signature::find_function(const std::string& n) const { return find_in(functions, n); }
const Signature::Sym* Signature::find_weight(const std::string& n) const { return find_in(weights, n); }

void Signature::check_unique() const {
    std::unordered_set<std::string> seen;
    for (const auto* v : {&relations, &functions, &weights})
        for (const auto& s : *v) {
            if (!seen.insert(s.name).second)
                fail("UnknownSymbol", "duplicate symbol " + s.name);
            if (s.arity < 0) fail("ArityMismatch", "negative arity for " + s.name);
        }
}

void Signature::add_relation(const std::string& n, int arity) {
    if (find_relation(n) || find_function(n) || find_weight(n))
        fail("UnknownSymbol", "duplicate symbol " + n);
    relations.push_back({n, arity});
}
void Signature::add_function(const std::string& n, int arity) {
    if (find_relation(n) || find_function(n) || find_weight(n))
        fail("UnknownSymbol", "duplicate symbol " + n);
    functions.push_back({n, arity});
}
void Signature::add_weight(const std::string& n, int arity) {
    if (find_relation(n) || find_function(n) || find_weight(n))
        fail("UnknownSymbol", "duplicate symbol " + n);
    weights.push_back({n, arity});
}

// --- Graph -------------------------------------------------------------------

void Graph::add_edge(int u, int v) {
    if (u == v) return;
    adj[u].push_back(v);
    adj[v].push_back(u);
}

void Graph::finish() {
    edges = 0;
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
        edges += (long long)a.size();
    }
    edges /= 2;
}

bool Graph::has_edge(int u, int v) const {
    const auto& a = adj[u];
    return std::binary_search(a.begin(), a.end(), v);
}

// --- WeightedStructure --------------------------------------------------------

int WeightedStructure::add_element(const std::string& label) {
    auto it = label_ids.find(label);
    if (it != label_ids.end()) return it->second;
    int id = (int)labels.size();
    labels.push_back(label);
    label_ids.emplace(label, id);
    gaifman_.reset();
    return id;
}

int WeightedStructure::element(const std::string& label) const {
    auto it = label_ids.find(label);
    if (it == label_ids.end()) fail("UnknownSymbol", "unknown element label " + label);
    return it->second;
}

bool WeightedStructure::has_tuple(const std::string& rel, const Tuple& t) const {
    auto it = rel_index_.find(rel);
    return it != rel_index_.end() && it->second.count(t);
}

const std::vector<Tuple>& WeightedStructure::tuples(const std::string& rel) const {
    static const std::vector<Tuple> empty;
    auto it = rel_tuples_.find(rel);
    return it == rel_tuples_.end() ? empty : it->second;
}

void WeightedStructure::add_tuple(const std::string& rel, const Tuple& t) {
    const auto* sym = sig.find_relation(rel);
    if (!sym) fail("UnknownSymbol", "unknown relation " + rel);
    if ((int)t.size() != sym->arity) fail("ArityMismatch", rel + " expects arity " + std::to_string(sym->arity));
    for (int e : t)
        if (e < 0 || e >= n()) fail("UnknownSymbol", "element id out of range in " + rel);
    if (rel_index_[rel].insert(t).second) rel_tuples_[rel].push_back(t);
    gaifman_.reset();
}

std::optional<int> WeightedStructure::apply_fun(const std::string& fun, const Tuple& args) const {
    auto it = fun_maps_.find(fun);
    if (it == fun_maps_.end()) return std::nullopt;
    auto jt = it->second.find(args);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
}

void WeightedStructure::set_fun(const std::string& fun, const Tuple& args, int image) {
    const auto* sym = sig.find_function(fun);
    if (!sym) fail("UnknownSymbol", "unknown function " + fun);
    if ((int)args.size() != sym->arity) fail("ArityMismatch", fun);
    fun_maps_[fun][args] = image;
    gaifman_.reset();
}

bool WeightedStructure::in_some_relation(const Tuple& t) const {
    for (const auto& [rel, idx] : rel_index_) {
        (void)rel;
        if (!idx.empty() && idx.begin()->size() == t.size() && idx.count(t)) return true;
    }
    // also accept function graphs: (args..., image)
    for (const auto& [fun, map] : fun_maps_) {
        (void)fun;
        if (map.empty()) continue;
        if (map.begin()->first.size() + 1 != t.size()) continue;
        Tuple args(t.begin(), t.end() - 1);
        auto it = map.find(args);
        if (it != map.end() && it->second == t.back()) return true;
    }
    return false;
}

Value WeightedStructure::weight(const std::string& w, const Tuple& t) const {
    auto it = weights_.find({w, t});
    if (it != weights_.end()) return it->second;
    if (default_one_.count(w) && (t.size() <= 1 || in_some_relation(t))) return semiring->one;
    return semiring->zero;
}

Value WeightedStructure::set_weight(const std::string& w, const Tuple& t, const Value& v) {
    const auto* sym = sig.find_weight(w);
    if (!sym) fail("UnknownSymbol", "unknown weight " + w);
    if ((int)t.size() != sym->arity) fail("ArityMismatch", w);
    if (t.size() > 1 && !semiring->is_zero(v) && !in_some_relation(t))
        fail("NonzeroWeightOutsideRelation",
             w + " on a tuple outside all relations");
    Value prev = weight(w, t);
    weights_[{w, t}] = v;
    for (auto& l : listeners_) l(w, t, v);
    return prev;
}

void WeightedStructure::set_default_one(const std::string& w) { default_one_.insert(w); }

void WeightedStructure::reserve_relation(const std::string& rel) { reserved_.insert(rel); }

bool WeightedStructure::is_clique(const Tuple& t) const {
    const Graph& g = gaifman();
    for (size_t i = 0; i < t.size(); i++)
        for (size_t j = i + 1; j < t.size(); j++)
            if (t[i] != t[j] && !g.has_edge(t[i], t[j])) return false;
    return true;
}

void WeightedStructure::apply_structure_update(bool add, const std::string& rel, const Tuple& t) {
    if (reserved_.count(rel)) fail("ReservedRelation", rel + " is immutable");
    const auto* sym = sig.find_relation(rel);
    if (!sym) fail("UnknownSymbol", "unknown relation " + rel);
    if ((int)t.size() != sym->arity) fail("ArityMismatch", rel);
    if (add && !is_clique(t))
        fail("GaifmanViolation", "added tuple is not a clique in the Gaifman graph");
    Graph before = gaifman();
    if (add) {
        if (rel_index_[rel].insert(t).second) rel_tuples_[rel].push_back(t);
    } else {
        auto& idx = rel_index_[rel];
        if (idx.erase(t)) {
            auto& v = rel_tuples_[rel];
            v.erase(std::remove(v.begin(), v.end(), t), v.end());
        }
    }
    gaifman_ = std::move(before); // Gaifman-preserving by construction
    for (auto& l : listeners_) l("", t, semiring->zero); // relation-change ping
}

const Graph& WeightedStructure::gaifman() const {
    if (!gaifman_) gaifman_ = gaifman_graph(*this);
    return *gaifman_;
}

Graph gaifman_graph(const WeightedStructure& s) {
    Graph g;
    g.n = s.n();
    g.adj.resize(g.n);
    auto clique = [&](const Tuple& t) {
        for (size_t i = 0; i < t.size(); i++)
            for (size_t j = i + 1; j < t.size(); j++) g.add_edge(t[i], t[j]);
    };
    for (const auto& [rel, ts] : s.rel_tuples_) {
        (void)rel;
        for (const auto& t : ts) clique(t);
    }
    for (const auto& [fun, map] : s.fun_maps_) {
        (void)fun;
        for (const auto& [args, img] : map) {
            Tuple t = args;
            t.push_back(img);
            clique(t);
        }
    }
    for (const auto& [key, v] : s.weights_)
        if (!s.semiring->is_zero(v)) clique(key.second);
    g.finish();
    return g;
}

// --- flat files --------------------------------------------------------------

static std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t tab = line.find('\t', pos);
        out.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
        if (tab == std::string::npos) break;
        pos = tab + 1;
    }
    return out;
}

Signature load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("SyntaxError", "cannot open schema " + path);
    Signature sig;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string kind, name;
        int arity;
        if (!(ss >> kind >> name >> arity)) fail("SyntaxError", "bad schema line: " + line);
        if (kind == "rel") sig.add_relation(name, arity);
        else if (kind == "fun") sig.add_function(name, arity);
        else if (kind == "weight") sig.add_weight(name, arity);
        else fail("SyntaxError", "bad schema kind: " + kind);
    }
    sig.check_unique();
    return sig;
}

WeightedStructure load_structure(const Signature& sig, const std::string& data_dir,
                                 const Semiring& semiring,
                                 const std::vector<std::string>& default_one) {
    namespace fs = std::filesystem;
    WeightedStructure s;
    s.sig = sig;
    s.semiring = semiring;

    auto elems = fs::path(data_dir) / "elements.tsv";
    if (fs::exists(elems)) {
        std::ifstream in(elems);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) s.add_element(line);
    }
    auto get_elem = [&](const std::string& label) { return s.add_element(label); };

    for (const auto& r : sig.relations) {
        auto p = fs::path(data_dir) / (r.name + ".tsv");
        if (!fs::exists(p)) continue;
        std::ifstream in(p);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cells = split_tabs(line);
            if ((int)cells.size() != r.arity) fail("ArityMismatch", r.name + ": " + line);
            Tuple t;
            for (auto& c : cells) t.push_back(get_elem(c));
            s.add_tuple(r.name, t);
        }
    }
    for (const auto& f : sig.functions) {
        auto p = fs::path(data_dir) / (f.name + ".tsv");
        if (!fs::exists(p)) continue;
        std::ifstream in(p);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cells = split_tabs(line);
            if ((int)cells.size() != f.arity + 1) fail("ArityMismatch", f.name + ": " + line);
            Tuple args;
            for (size_t i = 0; i + 1 < cells.size(); i++) args.push_back(get_elem(cells[i]));
            s.set_fun(f.name, args, get_elem(cells.back()));
        }
    }
    for (const auto& w : default_one) {
        if (!sig.find_weight(w)) fail("UnknownSymbol", "unknown weight " + w);
        s.set_default_one(w);
    }
    auto wfile = fs::path(data_dir) / "weights.tsv";
    if (fs::exists(wfile)) {
        std::ifstream in(wfile);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cells = split_tabs(line);
            if (cells.size() < 2) fail("SyntaxError", "bad weight line: " + line);
            const auto* sym = sig.find_weight(cells[0]);
            if (!sym) fail("UnknownSymbol", "unknown weight " + cells[0]);
            if ((int)cells.size() != sym->arity + 2) fail("ArityMismatch", line);
            Tuple t;
            for (int i = 0; i < sym->arity; i++) t.push_back(get_elem(cells[1 + i]));
            s.set_weight(cells[0], t, semiring->parse(cells.back()));
        }
    }
    return s;
}

} // namespace semicirc

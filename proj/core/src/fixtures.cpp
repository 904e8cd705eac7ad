#include "semicirc/fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace semicirc {

Signature fixture_signature() {
    Signature sig;
    sig.add_relation("V", 1);
    sig.add_relation("E", 2);
    sig.add_weight("w", 1);
    sig.add_weight("v", 2);
    return sig;
}

WeightedStructure fixture_structure(const std::string& kind, int n, unsigned seed,
                                    const Semiring& sr) {
    if (n < 1 || n > 1000000) fail("BudgetExceeded", "fixture size out of range");
    std::mt19937 rng(seed);
    WeightedStructure s;
    s.sig = fixture_signature();
    s.semiring = sr;

    auto edge = [&](int a, int b) {
        if (a == b) return;
        Tuple t{a, b};
        if (!s.has_tuple("E", t) && !s.has_tuple("E", {b, a})) s.add_tuple("E", t);
    };

    if (kind == "grid") {
        int k = (int)std::sqrt((double)n);
        while ((k + 1) * (k + 1) <= n) k++;
        n = std::max(k * k, 1);
    }
    for (int i = 0; i < n; i++) s.add_element("a" + std::to_string(i));
    for (int i = 0; i < n; i++) s.add_tuple("V", {i});

    if (kind == "bounded-degree") {
        std::vector<int> deg(n, 0);
        long long tries = 2ll * n;
        for (long long t = 0; t < tries; t++) {
            int a = (int)(rng() % n), b = (int)(rng() % n);
            if (a == b || deg[a] >= 3 || deg[b] >= 3) continue;
            Tuple e{a, b};
            if (s.has_tuple("E", e) || s.has_tuple("E", {b, a})) continue;
            s.add_tuple("E", e);
            deg[a]++;
            deg[b]++;
        }
    } else if (kind == "2-degenerate") {
        // back-edges land in a bounded window so the family has bounded
        // expansion (uniform attachment lets shallow minors grow with n), and
        // the attachment pattern repeats every 512 vertices so local structure
        // is the same at every size
        for (int v = 1; v < n; v++) {
            if (v % 512 == 0) rng.seed(seed ^ 0x9e3779b9u);
            int w = std::min(v, 64);
            int picks = (int)(rng() % 3);
            for (int i = 0; i < picks; i++) edge(v, v - 1 - (int)(rng() % w));
        }
    } else if (kind == "forest") {
        for (int v = 1; v < n; v++)
            if (rng() % 8) edge(v, (int)(rng() % v)); // child -> parent; some roots
    } else if (kind == "grid") {
        int k = (int)std::round(std::sqrt((double)n));
        for (int r = 0; r < k; r++)
            for (int c = 0; c < k; c++) {
                if (c + 1 < k) edge(r * k + c, r * k + c + 1);
                if (r + 1 < k) edge(r * k + c, (r + 1) * k + c);
            }
    } else {
        fail("SyntaxError", "unknown fixture kind " + kind);
    }

    for (int i = 0; i < n; i++) s.set_weight("w", {i}, sr->sample(rng));
    for (const auto& t : s.tuples("E")) s.set_weight("v", t, sr->sample(rng));
    return s;
}

void write_fixture(const WeightedStructure& s, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "elements.tsv");
        for (const auto& l : s.labels) out << l << "\n";
    }
    for (const auto& r : s.sig.relations) {
        std::ofstream out(fs::path(dir) / (r.name + ".tsv"));
        for (const auto& t : s.tuples(r.name)) {
            for (size_t i = 0; i < t.size(); i++) out << (i ? "\t" : "") << s.labels[t[i]];
            out << "\n";
        }
    }
    std::ofstream wout(fs::path(dir) / "weights.tsv");
    for (const auto& [key, val] : s.weight_entries()) {
        wout << key.first;
        for (int e : key.second) wout << "\t" << s.labels[e];
        wout << "\t" << s.semiring->str(val) << "\n";
    }
}

void generate_fixture(const std::string& kind, int n, unsigned seed, const std::string& dir) {
    write_fixture(fixture_structure(kind, n, seed, make_semiring("nat")), dir);
}

} // namespace semicirc

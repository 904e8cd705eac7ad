#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "semicirc/fixtures.hpp"
#include "semicirc/nested.hpp"

using namespace semicirc;

namespace {

struct Run {
    std::string schema, data, query, formula, updates, probe_at, sizes = "64,128,256,512";
    std::string semiring = "nat";
    int p = 0;
    int emit_stage = -1;
    unsigned seed = 1;
    long long limit = -1;
    bool emit_circuit = false, oracle_check = false, do_enumerate = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("SyntaxError", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

unsigned effective_seed(unsigned cli) {
    if (const char* env = std::getenv("SEMICIRC_SEED")) return (unsigned)std::stoul(env);
    return cli;
}

CompileOptions options(const Run& r) {
    CompileOptions o;
    o.p = r.p;
    o.seed = effective_seed(r.seed);
    o.keep_stages = r.emit_stage >= 0;
    return o;
}

WeightedStructure load(const Run& r, const Semiring& sr) {
    Signature sig = load_schema(r.schema);
    return load_structure(sig, r.data, sr);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, sep)) {
        size_t a = cell.find_first_not_of(" \t");
        size_t b = cell.find_last_not_of(" \t");
        out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    return out;
}

Tuple label_tuple(const WeightedStructure& s, const std::vector<std::string>& labels) {
    Tuple t;
    for (const auto& l : labels) t.push_back(s.element(l));
    return t;
}

void print_tuple(const WeightedStructure& s, const Tuple& t, std::ostream& os) {
    for (size_t i = 0; i < t.size(); i++) os << (i ? "\t" : "") << s.labels[t[i]];
    os << "\n";
}

// oracle cross-checks are best-effort: structures over the oracle budget skip
template <class F>
void oracle_guard(bool enabled, F&& check) {
    if (!enabled) return;
    try {
        check();
    } catch (const Error& e) {
        if (e.code != "BudgetExceeded") throw;
        std::cerr << "# oracle check skipped: " << e.what() << "\n";
    }
}

int mode_compile(const Run& r) {
    auto sr = make_semiring(r.semiring);
    auto s = load(r, sr);
    Expr e = parse_query(slurp(r.query), s.sig);
    auto opt = options(r);
    CompiledQuery cq = free_vars(e).empty() ? compile(s, e, opt) : compile_open(s, e, opt);
    auto st = cq.circuit.stats();
    std::cout << "size\tedges\tdepth\tmax_perm_rows\tmax_reachout\n"
              << st.size << "\t" << st.edges << "\t" << st.depth << "\t" << st.max_perm_rows
              << "\t" << st.max_reachout << "\n";
    if (r.emit_stage >= 0) {
        if (r.emit_stage >= (int)cq.stages.size())
            fail("SyntaxError", "stage index out of range (have " +
                                    std::to_string(cq.stages.size()) + ")");
        std::cout << "# stage " << cq.stages[r.emit_stage].first << "\n"
                  << cq.stages[r.emit_stage].second << "\n";
    }
    if (r.emit_circuit) std::cout << cq.circuit.dump();
    return 0;
}

int mode_eval(const Run& r) {
    auto sr = make_semiring(r.semiring);
    auto s = load(r, sr);
    Expr e = parse_query(slurp(r.query), s.sig);
    if (!free_vars(e).empty()) fail("SyntaxError", "eval needs a closed query; use probe");
    CompiledQuery cq = compile(s, e, options(r));
    Value v = cq.eval_on(s, sr);
    auto check = [&] {
        oracle_guard(r.oracle_check, [&] {
            if (!sr->eq(v, brute_eval(s, e)))
                fail("OracleMismatch", "compiled value disagrees with brute_eval");
        });
    };
    check();
    if (r.updates.empty()) {
        std::cout << sr->str(v) << "\n";
        return 0;
    }
    std::ifstream script(r.updates);
    if (!script) fail("SyntaxError", "cannot read " + r.updates);
    std::string line;
    while (std::getline(script, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line, '\t');
        if (cells.size() == 1) cells = split(line, ' ');
        if (cells[0] == "dump") {
            std::cout << sr->str(v) << "\n";
            check();
        } else if (cells[0] == "setw" && cells.size() >= 4) {
            std::string sym = cells[1];
            Tuple t = label_tuple(s, {cells.begin() + 2, cells.end() - 1});
            Value nv = sr->parse(cells.back());
            s.set_weight(sym, t, nv);
            v = cq.circuit.update_input({sym, t}, nv);
        } else if (cells[0] == "add" || cells[0] == "del") {
            fail("SyntaxError", "relation updates need a fresh compile; use enumerate sessions");
        } else {
            fail("SyntaxError", "bad update line: " + line);
        }
    }
    std::cout << sr->str(v) << "\n";
    return 0;
}

int mode_probe(const Run& r) {
    auto sr = make_semiring(r.semiring);
    auto s = load(r, sr);
    Expr e = parse_query(slurp(r.query), s.sig);
    if (free_vars(e).empty()) fail("SyntaxError", "probe needs an open query; use eval");
    if (r.probe_at.empty()) fail("SyntaxError", "probe needs --probe \"a,b\"");
    CompiledQuery cq = compile_open(s, e, options(r));
    cq.eval_on(s, sr);
    Tuple t = label_tuple(s, split(r.probe_at, ','));
    if (t.size() != cq.probe_vars.size()) fail("ArityMismatch", "probe tuple");
    Value v = cq.probe(t);
    oracle_guard(r.oracle_check, [&] {
        std::map<std::string, int> env;
        for (size_t i = 0; i < t.size(); i++) env[cq.probe_vars[i]] = t[i];
        if (!sr->eq(v, brute_eval(s, e, env)))
            fail("OracleMismatch", "probe disagrees with brute_eval");
    });
    for (size_t i = 0; i < cq.probe_vars.size(); i++)
        std::cout << (i ? "\t" : "") << cq.probe_vars[i];
    std::cout << "\n" << sr->str(v) << "\n";
    return 0;
}

int mode_enumerate(const Run& r) {
    auto sr = make_semiring(r.semiring);
    auto s = load(r, sr);
    Expr wrapped = parse_query("[" + slurp(r.formula) + "]", s.sig);
    Formula phi = wrapped->bracket;
    std::vector<std::string> vars;
    for (const auto& v : formula_vars(phi)) vars.push_back(v);
    if (vars.empty()) fail("SyntaxError", "enumerate needs a formula with free variables");
    EnumSession sess = enumerate_answers(s, phi, vars, options(r));
    auto dump = [&] {
        auto got = sess.answers();
        std::sort(got.begin(), got.end());
        oracle_guard(r.oracle_check, [&] {
            if (got != brute_answers(s, phi, vars))
                fail("OracleMismatch", "enumerated answers disagree with brute_answers");
        });
        long long shown = 0;
        for (const auto& t : got) {
            if (r.limit >= 0 && shown++ >= r.limit) break;
            print_tuple(s, t, std::cout);
        }
        std::cout << "# " << got.size() << " answers\n";
    };
    if (r.updates.empty()) {
        dump();
        return 0;
    }
    std::ifstream script(r.updates);
    if (!script) fail("SyntaxError", "cannot read " + r.updates);
    std::string line;
    while (std::getline(script, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line, '\t');
        if (cells.size() == 1) cells = split(line, ' ');
        if (cells[0] == "dump") {
            dump();
        } else if ((cells[0] == "add" || cells[0] == "del") && cells.size() >= 2) {
            Tuple t = label_tuple(s, {cells.begin() + 2, cells.end()});
            sess.apply(cells[0] == "add", cells[1], t);
            s.apply_structure_update(cells[0] == "add", cells[1], t); // keep oracle in step
        } else if (cells[0] == "setw") {
            fail("SyntaxError", "formula sessions have no weights; setw belongs to eval scripts");
        } else {
            fail("SyntaxError", "bad update line: " + line);
        }
    }
    return 0;
}

int mode_nested(const Run& r) {
    auto sr_def = make_semiring(r.semiring); // validates the token
    auto s = load(r, sr_def);
    const auto& reg = ConnectiveRegistry::builtins();
    Nested f = parse_nested(slurp(r.formula), s.sig, reg.sigs(), r.semiring);
    NestedEvaluation ev(s, f, reg, options(r));
    auto res = make_semiring(ev.semiring());
    if (ev.vars().empty()) {
        Value v = ev.value();
        oracle_guard(r.oracle_check, [&] {
            if (!res->eq(v, brute_nested(s, f, reg)))
                fail("OracleMismatch", "nested value disagrees with brute_nested");
        });
        std::cout << res->str(v) << "\n";
        return 0;
    }
    if (r.do_enumerate) {
        auto got = ev.answers();
        std::sort(got.begin(), got.end());
        for (const auto& t : got) print_tuple(s, t, std::cout);
        std::cout << "# " << got.size() << " answers\n";
        return 0;
    }
    if (!r.probe_at.empty()) {
        Tuple t = label_tuple(s, split(r.probe_at, ','));
        Value v = ev.probe(t);
        oracle_guard(r.oracle_check, [&] {
            std::map<std::string, int> env;
            for (size_t i = 0; i < t.size(); i++) env[ev.vars()[i]] = t[i];
            if (!res->eq(v, brute_nested(s, f, reg, env)))
                fail("OracleMismatch", "nested probe disagrees with brute_nested");
        });
        std::cout << res->str(v) << "\n";
        return 0;
    }
    // full value table over the free variables
    const auto& vars = ev.vars();
    for (size_t i = 0; i < vars.size(); i++) std::cout << (i ? "\t" : "") << vars[i];
    std::cout << "\tvalue\n";
    long long shown = 0;
    Tuple t(vars.size(), 0);
    std::function<void(size_t)> rec = [&](size_t i) {
        if (r.limit >= 0 && shown >= r.limit) return;
        if (i == vars.size()) {
            shown++;
            for (int e : t) std::cout << s.labels[e] << "\t";
            std::cout << res->str(ev.probe(t)) << "\n";
            return;
        }
        for (int a = 0; a < s.n(); a++) {
            t[i] = a;
            rec(i + 1);
        }
    };
    rec(0);
    return 0;
}

int mode_oracle(const Run& r) {
    auto sr = make_semiring(r.semiring);
    auto s = load(r, sr);
    if (!r.query.empty()) {
        Expr e = parse_query(slurp(r.query), s.sig);
        if (free_vars(e).empty()) {
            std::cout << sr->str(brute_eval(s, e)) << "\n";
            return 0;
        }
        if (r.probe_at.empty()) fail("SyntaxError", "open oracle query needs --probe");
        Tuple t = label_tuple(s, split(r.probe_at, ','));
        std::map<std::string, int> env;
        std::vector<std::string> vars;
        for (const auto& v : free_vars(e)) vars.push_back(v);
        if (t.size() != vars.size()) fail("ArityMismatch", "probe tuple");
        for (size_t i = 0; i < vars.size(); i++) env[vars[i]] = t[i];
        std::cout << sr->str(brute_eval(s, e, env)) << "\n";
        return 0;
    }
    if (!r.formula.empty()) {
        Formula phi = parse_query("[" + slurp(r.formula) + "]", s.sig)->bracket;
        std::vector<std::string> vars;
        for (const auto& v : formula_vars(phi)) vars.push_back(v);
        for (const auto& t : brute_answers(s, phi, vars)) print_tuple(s, t, std::cout);
        return 0;
    }
    fail("SyntaxError", "oracle needs --query or --formula");
}

int mode_bench(const Run& r) {
    auto nat = make_semiring("nat");
    unsigned seed = effective_seed(r.seed);
    Signature sig = fixture_signature();
    Expr tri = parse_query("sum x,y,z. [E(x,y)] * [E(y,z)] * [E(z,x)] * w(x)", sig);
    Formula edge = parse_query("[E(x,y)]", sig)->bracket;
    using clock = std::chrono::steady_clock;
    auto ms = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double, std::milli>(b - a).count();
    };
    std::cout << "n\tcompile_ms\teval_ms\tupdate_ns_p50\tdelay_ops_max\tcircuit_size\n";
    for (const auto& tok : split(r.sizes, ',')) {
        int n = std::stoi(tok);
        auto s = fixture_structure("2-degenerate", n, seed, nat);
        // fixtures store one direction per edge; close E under reversal so the
        // directed triangle pattern actually occurs
        const std::vector<Tuple> dir = s.tuples("E");
        for (const auto& t : dir)
            if (!s.has_tuple("E", {t[1], t[0]})) s.add_tuple("E", {t[1], t[0]});
        auto t0 = clock::now();
        CompiledQuery cq = compile(s, tri);
        auto t1 = clock::now();
        cq.eval_on(s, nat);
        auto t2 = clock::now();

        std::mt19937 rng(seed + 1);
        std::vector<long long> upd;
        const auto& keys = cq.circuit.input_keys();
        for (int i = 0; i < 201 && !keys.empty(); i++) {
            const InputKey& k = keys[rng() % keys.size()];
            if (k.tuple.size() > 1 && !s.in_some_relation(k.tuple)) continue;
            Value nv = nat->sample(rng);
            auto u0 = clock::now();
            cq.circuit.update_input(k, nv);
            auto u1 = clock::now();
            upd.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(u1 - u0).count());
        }
        std::sort(upd.begin(), upd.end());
        long long p50 = upd.empty() ? 0 : upd[upd.size() / 2];

        auto sess = enumerate_answers(s, edge, {"x", "y"});
        BiIterator& it = sess.iterator();
        long long worst = 0;
        unsigned long long steps = std::min<unsigned long long>(it.length() + 1, 512);
        for (unsigned long long i = 0; i < steps; i++) {
            it.reset_ops();
            it.current();
            it.next();
            worst = std::max(worst, it.ops());
        }
        std::cout << n << "\t" << ms(t0, t1) << "\t" << ms(t1, t2) << "\t" << p50 << "\t"
                  << worst << "\t" << cq.circuit.stats(0).size << "\n";
    }
    return 0;
}

int exit_code(const Error& e) {
    if (e.code == "BudgetExceeded") return 4;
    if (e.code == "OracleMismatch") return 3;
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semiring-weighted query compiler and dynamic evaluator"};
    app.require_subcommand(1);
    Run r;
    std::string kind = "2-degenerate", out = "fixture";
    int fn = 64;

    auto common = [&](CLI::App* c, bool needs_data) {
        auto* sc = c->add_option("--schema", r.schema, "schema file");
        auto* dt = c->add_option("--data", r.data, "data directory");
        if (needs_data) {
            sc->required();
            dt->required();
        }
        c->add_option("--semiring", r.semiring, "semiring token (default nat)");
        c->add_option("--p", r.p, "coloring parameter, 0 = auto");
        c->add_option("--seed", r.seed, "rng seed (SEMICIRC_SEED overrides)");
        c->add_flag("--oracle-check", r.oracle_check, "cross-validate against the oracle");
    };

    auto* c_compile = app.add_subcommand("compile", "compile a query, print circuit stats");
    common(c_compile, true);
    c_compile->add_option("--query", r.query)->required();
    c_compile->add_flag("--emit-circuit", r.emit_circuit);
    c_compile->add_option("--emit-stage", r.emit_stage);

    auto* c_eval = app.add_subcommand("eval", "evaluate a closed query");
    common(c_eval, true);
    c_eval->add_option("--query", r.query)->required();
    c_eval->add_option("--updates", r.updates, "setw/dump script");

    auto* c_probe = app.add_subcommand("probe", "evaluate an open query at a tuple");
    common(c_probe, true);
    c_probe->add_option("--query", r.query)->required();
    c_probe->add_option("--probe", r.probe_at, "comma-separated element labels");

    auto* c_enum = app.add_subcommand("enumerate", "enumerate the answers of a formula");
    common(c_enum, true);
    c_enum->add_option("--formula", r.formula)->required();
    c_enum->add_option("--updates", r.updates, "add/del/dump script");
    c_enum->add_option("--limit", r.limit, "max answers per dump");

    auto* c_nested = app.add_subcommand("nested", "evaluate a nested formula");
    common(c_nested, true);
    c_nested->add_option("--formula", r.formula)->required();
    c_nested->add_option("--probe", r.probe_at);
    c_nested->add_flag("--enumerate", r.do_enumerate);
    c_nested->add_option("--limit", r.limit);

    auto* c_oracle = app.add_subcommand("oracle", "brute-force reference answers");
    common(c_oracle, true);
    c_oracle->add_option("--query", r.query);
    c_oracle->add_option("--formula", r.formula);
    c_oracle->add_option("--probe", r.probe_at);

    auto* c_bench = app.add_subcommand("bench", "scaling table on generated graphs");
    c_bench->add_option("--sizes", r.sizes, "comma-separated n values");
    c_bench->add_option("--seed", r.seed);

    auto* c_fix = app.add_subcommand("fixture", "generate a data directory");
    c_fix->add_option("--kind", kind, "bounded-degree | 2-degenerate | forest | grid");
    c_fix->add_option("--n", fn)->required();
    c_fix->add_option("--seed", r.seed);
    c_fix->add_option("--out", out)->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (app.got_subcommand(c_compile)) return mode_compile(r);
        if (app.got_subcommand(c_eval)) return mode_eval(r);
        if (app.got_subcommand(c_probe)) return mode_probe(r);
        if (app.got_subcommand(c_enum)) return mode_enumerate(r);
        if (app.got_subcommand(c_nested)) return mode_nested(r);
        if (app.got_subcommand(c_oracle)) return mode_oracle(r);
        if (app.got_subcommand(c_bench)) return mode_bench(r);
        if (app.got_subcommand(c_fix)) {
            generate_fixture(kind, fn, effective_seed(r.seed), out);
            std::cout << out << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

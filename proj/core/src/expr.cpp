#include "semicirc/expr.hpp"

#include <sstream>

namespace semicirc {

// --- constructors ---------------------------------------------------------------

Term term_var(const std::string& v) {
    auto n = std::make_shared<TermNode>();
    n->var = v;
    return n;
}

Term term_fun(const std::string& f, std::vector<Term> args) {
    auto n = std::make_shared<TermNode>();
    n->fun = f;
    n->args = std::move(args);
    return n;
}

std::string term_str(const Term& t) {
    if (t->is_var()) return t->var;
    std::string s = t->fun + "(";
    for (size_t i = 0; i < t->args.size(); i++) s += (i ? "," : "") + term_str(t->args[i]);
    return s + ")";
}

namespace {
Formula mk_f(FormulaNode n) { return std::make_shared<FormulaNode>(std::move(n)); }
Expr mk_e(ExprNode n) { return std::make_shared<ExprNode>(std::move(n)); }
} // namespace

Formula f_rel(const std::string& rel, std::vector<Term> args) {
    FormulaNode n;
    n.k = FormulaNode::K::Rel;
    n.rel = rel;
    n.args = std::move(args);
    return mk_f(std::move(n));
}
Formula f_eq(Term a, Term b) {
    FormulaNode n;
    n.k = FormulaNode::K::Eq;
    n.args = {std::move(a), std::move(b)};
    return mk_f(std::move(n));
}
Formula f_and(std::vector<Formula> kids) {
    if (kids.size() == 1) return kids[0];
    FormulaNode n;
    n.k = FormulaNode::K::And;
    n.kids = std::move(kids);
    return mk_f(std::move(n));
}
Formula f_or(std::vector<Formula> kids) {
    if (kids.size() == 1) return kids[0];
    FormulaNode n;
    n.k = FormulaNode::K::Or;
    n.kids = std::move(kids);
    return mk_f(std::move(n));
}
Formula f_not(Formula a) {
    FormulaNode n;
    n.k = FormulaNode::K::Not;
    n.kids = {std::move(a)};
    return mk_f(std::move(n));
}
Formula f_true() {
    FormulaNode n;
    n.k = FormulaNode::K::True;
    return mk_f(std::move(n));
}
Formula f_false() {
    FormulaNode n;
    n.k = FormulaNode::K::False;
    return mk_f(std::move(n));
}

std::string formula_str(const Formula& f) {
    switch (f->k) {
        case FormulaNode::K::Rel: {
            std::string s = f->rel + "(";
            for (size_t i = 0; i < f->args.size(); i++)
                s += (i ? "," : "") + term_str(f->args[i]);
            return s + ")";
        }
        case FormulaNode::K::Eq:
            return term_str(f->args[0]) + "=" + term_str(f->args[1]);
        case FormulaNode::K::And:
        case FormulaNode::K::Or: {
            std::string op = f->k == FormulaNode::K::And ? " & " : " | ";
            std::string s = "(";
            for (size_t i = 0; i < f->kids.size(); i++)
                s += (i ? op : "") + formula_str(f->kids[i]);
            return s + ")";
        }
        case FormulaNode::K::Not:
            return "!" + formula_str(f->kids[0]);
        case FormulaNode::K::True:
            return "true";
        case FormulaNode::K::False:
            return "false";
    }
    return "?";
}

Expr e_const(const Num& v) {
    ExprNode n;
    n.k = ExprNode::K::Const;
    n.cval = v;
    return mk_e(std::move(n));
}
Expr e_weight(const std::string& w, std::vector<Term> args) {
    ExprNode n;
    n.k = ExprNode::K::Weight;
    n.wsym = w;
    n.args = std::move(args);
    return mk_e(std::move(n));
}
Expr e_bracket(Formula f) {
    ExprNode n;
    n.k = ExprNode::K::Bracket;
    n.bracket = std::move(f);
    return mk_e(std::move(n));
}
Expr e_add(std::vector<Expr> kids) {
    std::vector<Expr> flat;
    for (auto& k : kids) {
        if (k->k == ExprNode::K::Add)
            flat.insert(flat.end(), k->kids.begin(), k->kids.end());
        else
            flat.push_back(k);
    }
    if (flat.empty()) return e_bracket(f_false());
    if (flat.size() == 1) return flat[0];
    ExprNode n;
    n.k = ExprNode::K::Add;
    n.kids = std::move(flat);
    return mk_e(std::move(n));
}
Expr e_mul(std::vector<Expr> kids) {
    std::vector<Expr> flat;
    for (auto& k : kids) {
        if (k->k == ExprNode::K::Mul)
            flat.insert(flat.end(), k->kids.begin(), k->kids.end());
        else
            flat.push_back(k);
    }
    if (flat.empty()) return e_bracket(f_true());
    if (flat.size() == 1) return flat[0];
    ExprNode n;
    n.k = ExprNode::K::Mul;
    n.kids = std::move(flat);
    return mk_e(std::move(n));
}
Expr e_sum(const std::string& var, Expr body) {
    ExprNode n;
    n.k = ExprNode::K::Sum;
    n.var = var;
    n.kids = {std::move(body)};
    return mk_e(std::move(n));
}

std::string expr_str(const Expr& e) {
    switch (e->k) {
        case ExprNode::K::Const:
            return num_str(e->cval);
        case ExprNode::K::Weight: {
            std::string s = e->wsym + "(";
            for (size_t i = 0; i < e->args.size(); i++)
                s += (i ? "," : "") + term_str(e->args[i]);
            return s + ")";
        }
        case ExprNode::K::Bracket:
            return "[" + formula_str(e->bracket) + "]";
        case ExprNode::K::Add:
        case ExprNode::K::Mul: {
            std::string op = e->k == ExprNode::K::Add ? " + " : "*";
            std::string s = "(";
            for (size_t i = 0; i < e->kids.size(); i++) s += (i ? op : "") + expr_str(e->kids[i]);
            return s + ")";
        }
        case ExprNode::K::Sum:
            return "(sum " + e->var + ". " + expr_str(e->kids[0]) + ")";
    }
    return "?";
}

// --- free variables -------------------------------------------------------------

namespace {
void term_vars_into(const Term& t, std::set<std::string>& out) {
    if (t->is_var()) {
        out.insert(t->var);
        return;
    }
    for (const auto& a : t->args) term_vars_into(a, out);
}
void formula_vars_into(const Formula& f, std::set<std::string>& out) {
    for (const auto& a : f->args) term_vars_into(a, out);
    for (const auto& k : f->kids) formula_vars_into(k, out);
}
void free_vars_into(const Expr& e, std::set<std::string>& out) {
    switch (e->k) {
        case ExprNode::K::Const:
            return;
        case ExprNode::K::Weight:
            for (const auto& a : e->args) term_vars_into(a, out);
            return;
        case ExprNode::K::Bracket:
            formula_vars_into(e->bracket, out);
            return;
        case ExprNode::K::Add:
        case ExprNode::K::Mul:
            for (const auto& k : e->kids) free_vars_into(k, out);
            return;
        case ExprNode::K::Sum: {
            std::set<std::string> inner;
            free_vars_into(e->kids[0], inner);
            inner.erase(e->var);
            out.insert(inner.begin(), inner.end());
            return;
        }
    }
}
} // namespace

std::set<std::string> formula_vars(const Formula& f) {
    std::set<std::string> out;
    formula_vars_into(f, out);
    return out;
}

std::set<std::string> free_vars(const Expr& e) {
    std::set<std::string> out;
    free_vars_into(e, out);
    return out;
}

// --- parser -----------------------------------------------------------------------

namespace {

struct Token {
    enum class K { Ident, Number, Sym, End };
    K k;
    std::string text;
};

struct Lexer {
    std::string src;
    size_t pos = 0;
    Token cur;

    explicit Lexer(std::string s) : src(std::move(s)) { advance(); }

    void advance() {
        while (pos < src.size() && isspace((unsigned char)src[pos])) pos++;
        if (pos >= src.size()) {
            cur = {Token::K::End, ""};
            return;
        }
        char c = src[pos];
        if (isalpha((unsigned char)c) || c == '_') {
            size_t s = pos;
            while (pos < src.size() && (isalnum((unsigned char)src[pos]) || src[pos] == '_')) pos++;
            cur = {Token::K::Ident, src.substr(s, pos - s)};
            return;
        }
        if (isdigit((unsigned char)c)) {
            size_t s = pos;
            while (pos < src.size() && isdigit((unsigned char)src[pos])) pos++;
            if (pos + 1 < src.size() && src[pos] == '/' && isdigit((unsigned char)src[pos + 1])) {
                pos++;
                while (pos < src.size() && isdigit((unsigned char)src[pos])) pos++;
            }
            cur = {Token::K::Number, src.substr(s, pos - s)};
            return;
        }
        if (c == '!' && pos + 1 < src.size() && src[pos + 1] == '=') {
            pos += 2;
            cur = {Token::K::Sym, "!="};
            return;
        }
        static const std::string singles = "+*()[],.=&|!@";
        if (singles.find(c) != std::string::npos) {
            pos++;
            cur = {Token::K::Sym, std::string(1, c)};
            return;
        }
        fail("SyntaxError", std::string("unexpected character '") + c + "'");
    }

    bool is_sym(const std::string& s) const { return cur.k == Token::K::Sym && cur.text == s; }
    bool is_ident(const std::string& s) const { return cur.k == Token::K::Ident && cur.text == s; }
    void expect_sym(const std::string& s) {
        if (!is_sym(s)) fail("SyntaxError", "expected '" + s + "' before '" + cur.text + "'");
        advance();
    }
    std::string take_ident() {
        if (cur.k != Token::K::Ident) fail("SyntaxError", "expected identifier, got '" + cur.text + "'");
        std::string t = cur.text;
        advance();
        return t;
    }
};

struct Parser {
    Lexer lx;
    const Signature& sig;

    Parser(const std::string& text, const Signature& s) : lx(text), sig(s) {}

    Term parse_term() {
        std::string name = lx.take_ident();
        if (lx.is_sym("(")) {
            const auto* f = sig.find_function(name);
            if (!f) {
                if (sig.find_relation(name))
                    fail("SyntaxError", "relation " + name + " used in term position");
                fail("UnknownSymbol", "unknown function symbol " + name);
            }
            auto args = parse_termlist();
            if ((int)args.size() != f->arity)
                fail("SyntaxError", name + " expects " + std::to_string(f->arity) + " arguments");
            return term_fun(name, std::move(args));
        }
        return term_var(name);
    }

    std::vector<Term> parse_termlist() {
        lx.expect_sym("(");
        std::vector<Term> args;
        if (!lx.is_sym(")")) {
            args.push_back(parse_term());
            while (lx.is_sym(",")) {
                lx.advance();
                args.push_back(parse_term());
            }
        }
        lx.expect_sym(")");
        return args;
    }

    Formula parse_qf() { // '|' lowest, '&' higher, '!' highest
        std::vector<Formula> ors{parse_conj()};
        while (lx.is_sym("|")) {
            lx.advance();
            ors.push_back(parse_conj());
        }
        return f_or(std::move(ors));
    }

    Formula parse_conj() {
        std::vector<Formula> ands{parse_unit()};
        while (lx.is_sym("&")) {
            lx.advance();
            ands.push_back(parse_unit());
        }
        return f_and(std::move(ands));
    }

    Formula parse_unit() {
        if (lx.is_sym("!")) {
            lx.advance();
            return f_not(parse_unit());
        }
        if (lx.is_sym("(")) {
            lx.advance();
            Formula f = parse_qf();
            lx.expect_sym(")");
            return f;
        }
        if (lx.is_ident("exists") || lx.is_ident("forall"))
            fail("QuantifierInBracket",
                 "quantifiers are not allowed in brackets; use a boolean-semiring sum instead");
        if (lx.is_ident("true")) {
            lx.advance();
            return f_true();
        }
        if (lx.is_ident("false")) {
            lx.advance();
            return f_false();
        }
        // relation atom or term (in)equality
        if (lx.cur.k != Token::K::Ident) fail("SyntaxError", "expected literal in bracket");
        std::string name = lx.cur.text;
        const auto* r = sig.find_relation(name);
        if (r && !sig.find_function(name)) {
            lx.advance();
            auto args = parse_termlist();
            if ((int)args.size() != r->arity)
                fail("SyntaxError", name + " expects " + std::to_string(r->arity) + " arguments");
            return f_rel(name, std::move(args));
        }
        Term a = parse_term();
        bool neg = lx.is_sym("!=");
        if (!neg && !lx.is_sym("=")) fail("SyntaxError", "expected '=' or '!=' after term");
        lx.advance();
        Term b = parse_term();
        Formula eq = f_eq(std::move(a), std::move(b));
        return neg ? f_not(std::move(eq)) : eq;
    }

    Expr parse_expr() {
        std::vector<Expr> terms{parse_product()};
        while (lx.is_sym("+")) {
            lx.advance();
            terms.push_back(parse_product());
        }
        return e_add(std::move(terms));
    }

    Expr parse_product() {
        std::vector<Expr> atoms{parse_atom()};
        while (lx.is_sym("*")) {
            lx.advance();
            atoms.push_back(parse_atom());
        }
        return e_mul(std::move(atoms));
    }

    Expr parse_atom() {
        if (lx.cur.k == Token::K::Number) {
            Num v = num_parse(lx.cur.text);
            lx.advance();
            return e_const(v);
        }
        if (lx.is_sym("(")) {
            lx.advance();
            Expr e = parse_expr();
            lx.expect_sym(")");
            return e;
        }
        if (lx.is_sym("[")) {
            lx.advance();
            Formula f = parse_qf();
            lx.expect_sym("]");
            if (lx.is_sym("@"))
                fail("SyntaxError", "semiring annotations are only valid in nested formulas");
            return e_bracket(std::move(f));
        }
        if (lx.is_ident("sum")) {
            lx.advance();
            std::vector<std::string> vars{lx.take_ident()};
            while (lx.is_sym(",")) {
                lx.advance();
                vars.push_back(lx.take_ident());
            }
            lx.expect_sym(".");
            Expr body = parse_product();
            for (auto it = vars.rbegin(); it != vars.rend(); ++it) body = e_sum(*it, body);
            return body;
        }
        if (lx.cur.k == Token::K::Ident) {
            std::string name = lx.take_ident();
            const auto* w = sig.find_weight(name);
            if (!w) {
                if (sig.find_relation(name))
                    fail("UnknownSymbol",
                         name + " is a relation; wrap it in an Iverson bracket [" + name + "(..)]");
                fail("UnknownSymbol", "unknown weight symbol " + name);
            }
            auto args = parse_termlist();
            if ((int)args.size() != w->arity)
                fail("SyntaxError", name + " expects " + std::to_string(w->arity) + " arguments");
            return e_weight(name, std::move(args));
        }
        fail("SyntaxError", "unexpected token '" + lx.cur.text + "'");
    }
};

} // namespace

Expr parse_query(const std::string& text, const Signature& sig) {
    Parser p(text, sig);
    Expr e = p.parse_expr();
    if (p.lx.cur.k != Token::K::End)
        fail("SyntaxError", "trailing input at '" + p.lx.cur.text + "'");
    return e;
}

// --- simplification ----------------------------------------------------------------

std::string graph_rel(const std::string& fun) { return "@graph:" + fun; }

Signature relational_signature(const Signature& sig) {
    Signature out;
    out.relations = sig.relations;
    out.weights = sig.weights;
    for (const auto& f : sig.functions) out.add_relation(graph_rel(f.name), f.arity + 1);
    out.check_unique();
    return out;
}

namespace {

struct Simplifier {
    int fresh_counter = 0;
    std::set<std::string> used;

    std::string fresh() { return "$" + std::to_string(++fresh_counter); }

    // --- binder renaming: make all binders distinct from each other and from
    // every other variable occurring anywhere in the expression
    Term rename_term(const Term& t, const std::map<std::string, std::string>& env) {
        if (t->is_var()) {
            auto it = env.find(t->var);
            return it == env.end() ? t : term_var(it->second);
        }
        std::vector<Term> args;
        for (const auto& a : t->args) args.push_back(rename_term(a, env));
        return term_fun(t->fun, std::move(args));
    }
    Formula rename_formula(const Formula& f, const std::map<std::string, std::string>& env) {
        FormulaNode n = *f;
        for (auto& a : n.args) a = rename_term(a, env);
        for (auto& k : n.kids) k = rename_formula(k, env);
        return mk_f(std::move(n));
    }
    Expr rename(const Expr& e, std::map<std::string, std::string> env) {
        ExprNode n = *e;
        switch (e->k) {
            case ExprNode::K::Const:
                break;
            case ExprNode::K::Weight:
                for (auto& a : n.args) a = rename_term(a, env);
                break;
            case ExprNode::K::Bracket:
                n.bracket = rename_formula(e->bracket, env);
                break;
            case ExprNode::K::Add:
            case ExprNode::K::Mul:
                for (auto& k : n.kids) k = rename(k, env);
                break;
            case ExprNode::K::Sum: {
                std::string nv = e->var;
                if (used.count(nv)) nv = fresh();
                used.insert(nv);
                env[e->var] = nv;
                n.var = nv;
                n.kids[0] = rename(e->kids[0], env);
                break;
            }
        }
        return mk_e(std::move(n));
    }

    // --- term flattening: reduce a term to a variable, collecting graph-atom
    // condition brackets and the fresh binders they introduce
    struct Flat {
        std::vector<std::string> binders;
        std::vector<Expr> conds;
    };

    std::string flatten_term(const Term& t, Flat& out) {
        if (t->is_var()) return t->var;
        std::vector<Term> vars;
        for (const auto& a : t->args) vars.push_back(term_var(flatten_term(a, out)));
        std::string z = fresh();
        vars.push_back(term_var(z));
        out.binders.push_back(z);
        out.conds.push_back(e_bracket(f_rel(graph_rel(t->fun), std::move(vars))));
        return z;
    }

    Expr close(Flat&& fl, std::vector<Expr> factors) {
        std::vector<Expr> all = std::move(fl.conds);
        for (auto& f : factors) all.push_back(std::move(f));
        Expr e = e_mul(std::move(all));
        for (auto it = fl.binders.rbegin(); it != fl.binders.rend(); ++it) e = e_sum(*it, e);
        return e;
    }

    // --- bracket expansion to single-literal products
    Expr expand(const Formula& f, bool neg) {
        switch (f->k) {
            case FormulaNode::K::True:
                return e_bracket(neg ? f_false() : f_true());
            case FormulaNode::K::False:
                return e_bracket(neg ? f_true() : f_false());
            case FormulaNode::K::Not:
                return expand(f->kids[0], !neg);
            case FormulaNode::K::And:
            case FormulaNode::K::Or: {
                bool conj = (f->k == FormulaNode::K::And) != neg; // De Morgan
                std::vector<Expr> parts;
                for (const auto& k : f->kids) parts.push_back(expand(k, neg));
                if (conj) return e_mul(std::move(parts));
                // exclusive 3-term disjunction expansion, folded left
                std::vector<Expr> nparts;
                for (const auto& k : f->kids) nparts.push_back(expand(k, !neg));
                Expr acc = parts[0], nacc = nparts[0];
                for (size_t i = 1; i < parts.size(); i++) {
                    Expr a = acc, na = nacc, b = parts[i], nb = nparts[i];
                    acc = e_add({e_mul({a, b}), e_mul({a, nb}), e_mul({na, b})});
                    nacc = e_mul({na, nb});
                }
                return acc;
            }
            case FormulaNode::K::Rel: {
                Flat fl;
                std::vector<Term> vars;
                for (const auto& a : f->args) vars.push_back(term_var(flatten_term(a, fl)));
                Formula lit = f_rel(f->rel, std::move(vars));
                if (neg) lit = f_not(std::move(lit));
                return close(std::move(fl), {e_bracket(std::move(lit))});
            }
            case FormulaNode::K::Eq: {
                const Term &a = f->args[0], &b = f->args[1];
                if (!neg) {
                    // orient so a function application absorbs the other side
                    if (a->is_var() && !b->is_var()) return expand(f_eq(b, a), false);
                    if (!a->is_var()) {
                        Flat fl;
                        std::vector<Term> vars;
                        for (const auto& arg : a->args)
                            vars.push_back(term_var(flatten_term(arg, fl)));
                        vars.push_back(term_var(b->is_var() ? b->var : flatten_term(b, fl)));
                        return close(std::move(fl),
                                     {e_bracket(f_rel(graph_rel(a->fun), std::move(vars)))});
                    }
                }
                Flat fl;
                std::string u = flatten_term(a, fl), v = flatten_term(b, fl);
                Formula lit = f_eq(term_var(u), term_var(v));
                if (neg) lit = f_not(std::move(lit));
                return close(std::move(fl), {e_bracket(std::move(lit))});
            }
        }
        fail("SyntaxError", "unknown formula node");
    }

    Expr walk(const Expr& e) {
        switch (e->k) {
            case ExprNode::K::Const:
                return e;
            case ExprNode::K::Bracket:
                return expand(e->bracket, false);
            case ExprNode::K::Weight: {
                Flat fl;
                std::vector<Term> vars;
                for (const auto& a : e->args) vars.push_back(term_var(flatten_term(a, fl)));
                return close(std::move(fl), {e_weight(e->wsym, std::move(vars))});
            }
            case ExprNode::K::Add:
            case ExprNode::K::Mul: {
                ExprNode n = *e;
                for (auto& k : n.kids) k = walk(k);
                return mk_e(std::move(n));
            }
            case ExprNode::K::Sum: {
                ExprNode n = *e;
                n.kids[0] = walk(e->kids[0]);
                return mk_e(std::move(n));
            }
        }
        fail("SyntaxError", "unknown expression node");
    }
};

} // namespace

Expr simplify(const Expr& e, const Signature& sig) {
    (void)sig;
    Simplifier s;
    // claim free-variable names up front; binders claim theirs in pre-order,
    // so only genuinely clashing binders get fresh names
    for (const auto& v : free_vars(e)) s.used.insert(v);
    Expr renamed = s.rename(e, {});
    return s.walk(renamed);
}

// --- nested formulas --------------------------------------------------------------

std::set<std::string> nested_free_vars(const Nested& n) {
    std::set<std::string> out;
    switch (n->k) {
        case NestedNode::K::Leaf:
            return free_vars(n->leaf);
        case NestedNode::K::Conn:
            for (const auto& a : n->guard_args) term_vars_into(a, out);
            for (const auto& k : n->kids)
                for (const auto& v : nested_free_vars(k)) out.insert(v);
            return out;
        case NestedNode::K::Add:
        case NestedNode::K::Mul:
            for (const auto& k : n->kids)
                for (const auto& v : nested_free_vars(k)) out.insert(v);
            return out;
        case NestedNode::K::Sum: {
            out = nested_free_vars(n->kids[0]);
            out.erase(n->var);
            return out;
        }
    }
    return out;
}

namespace {

Nested mk_n(NestedNode n) { return std::make_shared<const NestedNode>(std::move(n)); }

Nested n_leaf(Expr e, const std::string& sr) {
    NestedNode n;
    n.k = NestedNode::K::Leaf;
    n.semiring = sr;
    n.leaf = std::move(e);
    return mk_n(std::move(n));
}

// numbers of these semirings share the Num carrier and embed into each other
// by reinterpretation, so values may cross such boundaries implicitly
bool numeric_token(const std::string& t) {
    return t == "bool" || t == "nat" || t == "int" || t == "rat" || t == "minplus" ||
           t == "maxplus";
}

void require_cast(const Nested& kid, const std::string& to) {
    if (kid->semiring == to) return;
    if (numeric_token(kid->semiring) && numeric_token(to)) return;
    fail("TypeMismatch", "no implicit cast from " + kid->semiring + " to " + to);
}

struct NestedParser : Parser {
    const std::vector<ConnSig>& conns;

    NestedParser(const std::string& text, const Signature& s, const std::vector<ConnSig>& c)
        : Parser(text, s), conns(c) {}

    const ConnSig* find_conn(const std::string& n) const {
        for (const auto& c : conns)
            if (c.name == n) return &c;
        return nullptr;
    }

    Nested combine(std::vector<Nested> kids, NestedNode::K k, const std::string& amb) {
        if (kids.size() == 1) return kids[0];
        bool plain = true;
        for (const auto& kid : kids)
            plain = plain && kid->k == NestedNode::K::Leaf && kid->semiring == amb;
        if (plain) {
            std::vector<Expr> es;
            for (const auto& kid : kids) es.push_back(kid->leaf);
            return n_leaf(k == NestedNode::K::Add ? e_add(std::move(es)) : e_mul(std::move(es)),
                          amb);
        }
        for (const auto& kid : kids) require_cast(kid, amb);
        NestedNode n;
        n.k = k;
        n.semiring = amb;
        n.kids = std::move(kids);
        return mk_n(std::move(n));
    }

    Nested parse_nexpr(const std::string& amb) {
        std::vector<Nested> kids{parse_nterm(amb)};
        while (lx.is_sym("+")) {
            lx.advance();
            kids.push_back(parse_nterm(amb));
        }
        return combine(std::move(kids), NestedNode::K::Add, amb);
    }

    Nested parse_nterm(const std::string& amb) {
        std::vector<Nested> kids{parse_natom(amb)};
        while (lx.is_sym("*")) {
            lx.advance();
            kids.push_back(parse_natom(amb));
        }
        return combine(std::move(kids), NestedNode::K::Mul, amb);
    }

    Nested parse_binder(const std::string& amb) {
        std::string kw = lx.take_ident(); // sum | max | min
        std::string inner = kw == "max" ? "maxplus" : kw == "min" ? "minplus" : amb;
        std::vector<std::string> vars{lx.take_ident()};
        while (lx.is_sym(",")) {
            lx.advance();
            vars.push_back(lx.take_ident());
        }
        lx.expect_sym(".");
        Nested body = parse_nterm(inner);
        for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
            if (body->k == NestedNode::K::Leaf && body->semiring == inner) {
                body = n_leaf(e_sum(*it, body->leaf), inner);
                continue;
            }
            require_cast(body, inner);
            NestedNode n;
            n.k = NestedNode::K::Sum;
            n.semiring = inner;
            n.var = *it;
            n.kids = {std::move(body)};
            body = mk_n(std::move(n));
        }
        return body;
    }

    Nested parse_guarded() {
        lx.advance(); // guard
        lx.expect_sym("[");
        std::string rel = lx.take_ident();
        const auto* r = sig.find_relation(rel);
        if (!r) fail("UnknownSymbol", "unknown guard relation " + rel);
        lx.expect_sym("(");
        std::vector<Term> gargs;
        std::set<std::string> gvars;
        gargs.push_back(term_var(lx.take_ident()));
        while (lx.is_sym(",")) {
            lx.advance();
            gargs.push_back(term_var(lx.take_ident()));
        }
        lx.expect_sym(")");
        lx.expect_sym("]");
        if ((int)gargs.size() != r->arity)
            fail("SyntaxError", rel + " expects " + std::to_string(r->arity) + " arguments");
        for (const auto& a : gargs) gvars.insert(a->var);

        std::string cn = lx.take_ident();
        const ConnSig* cs = find_conn(cn);
        if (!cs) fail("UnregisteredConnective", cn);
        lx.expect_sym("(");
        std::vector<Nested> args;
        size_t i = 0;
        for (;;) {
            std::string amb = i < cs->arg_semirings.size() ? cs->arg_semirings[i] : "rat";
            args.push_back(parse_nexpr(amb));
            i++;
            if (!lx.is_sym(",")) break;
            lx.advance();
        }
        lx.expect_sym(")");
        if (args.size() != cs->arg_semirings.size())
            fail("TypeMismatch", cn + " expects " + std::to_string(cs->arg_semirings.size()) +
                                     " arguments");
        for (size_t j = 0; j < args.size(); j++) {
            require_cast(args[j], cs->arg_semirings[j]);
            for (const auto& v : nested_free_vars(args[j]))
                if (!gvars.count(v))
                    fail("UnguardedConnective",
                         "free variable " + v + " of a " + cn + " argument is not covered by " +
                             rel + "'s guard variables");
        }
        NestedNode n;
        n.k = NestedNode::K::Conn;
        n.semiring = cs->result_semiring;
        n.conn = cn;
        n.guard_rel = rel;
        n.guard_args = std::move(gargs);
        n.kids = std::move(args);
        return mk_n(std::move(n));
    }

    Nested parse_natom(const std::string& amb) {
        if (lx.cur.k == Token::K::Number) {
            Num v = num_parse(lx.cur.text);
            lx.advance();
            return n_leaf(e_const(v), amb);
        }
        if (lx.is_sym("(")) {
            lx.advance();
            Nested e = parse_nexpr(amb);
            lx.expect_sym(")");
            return e;
        }
        if (lx.is_sym("[")) {
            lx.advance();
            Formula f = parse_qf();
            lx.expect_sym("]");
            if (lx.is_sym("@")) {
                lx.advance();
                std::string sr = lx.take_ident();
                // annotations are explicit typing only; the 0/1 of tropical
                // semirings differ numerically, so those may not cross over
                static const std::set<std::string> plain{"bool", "nat", "int", "rat"};
                if (sr != amb && !(plain.count(sr) && plain.count(amb)))
                    fail("TypeMismatch", "bracket annotated @" + sr + " in a " + amb + " context");
            }
            return n_leaf(e_bracket(std::move(f)), amb);
        }
        if (lx.is_ident("sum") || lx.is_ident("max") || lx.is_ident("min"))
            return parse_binder(amb);
        if (lx.is_ident("guard")) return parse_guarded();
        if (lx.cur.k == Token::K::Ident && find_conn(lx.cur.text))
            fail("UnguardedConnective", "connective " + lx.cur.text + " must appear under a guard");
        if (lx.cur.k == Token::K::Ident) {
            std::string name = lx.take_ident();
            const auto* w = sig.find_weight(name);
            if (!w) {
                if (sig.find_relation(name))
                    fail("UnknownSymbol",
                         name + " is a relation; wrap it in an Iverson bracket [" + name + "(..)]");
                fail("UnknownSymbol", "unknown weight symbol " + name);
            }
            auto args = parse_termlist();
            if ((int)args.size() != w->arity)
                fail("SyntaxError", name + " expects " + std::to_string(w->arity) + " arguments");
            return n_leaf(e_weight(name, std::move(args)), amb);
        }
        fail("SyntaxError", "unexpected token '" + lx.cur.text + "'");
    }
};

} // namespace

Nested parse_nested(const std::string& text, const Signature& sig,
                    const std::vector<ConnSig>& conns, const std::string& def_sr) {
    NestedParser p(text, sig, conns);
    Nested n = p.parse_nexpr(def_sr);
    if (p.lx.cur.k != Token::K::End)
        fail("SyntaxError", "trailing input at '" + p.lx.cur.text + "'");
    return n;
}

} // namespace semicirc

#include "soplog/ast.hpp"
#include "soplog/error.hpp"
#include "soplog/stdlib.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace soplog {

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
    Tok kind;
    std::string text;
    int line;
    int col;
};

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t count) {
        for (std::size_t j = 0; j < count; ++j) {
            if (s[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < s.size()) {
        char c = s[i];
        if (c == '#') {
            while (i < s.size() && s[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        int l = line, cl = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            out.push_back({Tok::Ident, std::string(s.substr(i, j - i)), l, cl});
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            out.push_back({Tok::Number, std::string(s.substr(i, j - i)), l, cl});
            advance(j - i);
        } else if (c == '!' && i + 1 < s.size() && s[i + 1] == '=') {
            out.push_back({Tok::Punct, "!=", l, cl});
            advance(2);
        } else if (std::string_view("()[],.:^&|!=;{}@").find(c) != std::string_view::npos) {
            out.push_back({Tok::Punct, std::string(1, c), l, cl});
            advance(1);
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", l, cl);
        }
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

const std::set<std::string> kKeywords = {"exists", "forall", "in", "sovar", "const"};

class Parser {
public:
    Parser(std::string_view text, const ParseOptions& opts)
        : toks_(tokenize(text)), opts_(opts), macro_names_(opts.macro_prefix) {
        for (const auto& t : toks_)
            if (t.kind == Tok::Ident) macro_names_.avoid(t.text);
    }

    Formula parse_file() {
        while (peek_ident("sovar") || peek_ident("const")) declaration();
        if (peek().kind == Tok::End) fail("expected a formula");
        Formula f = formula();
        if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "' after formula");
        return f;
    }

private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    const Token& get() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool peek_punct(const char* p, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::Punct && peek(ahead).text == p;
    }
    bool peek_ident(const char* w) const { return peek().kind == Tok::Ident && peek().text == w; }

    [[noreturn]] void fail(const std::string& msg) const { fail_at(peek(), msg); }
    [[noreturn]] void fail_at(const Token& t, const std::string& msg) const { throw ParseError(msg, t.line, t.col); }

    std::string describe(const Token& t) const {
        if (t.kind == Tok::End) return "end of input";
        return "'" + t.text + "'";
    }

    void expect(const char* p) {
        if (!peek_punct(p)) fail(std::string("expected '") + p + "', found " + describe(peek()));
        get();
    }

    bool accept(const char* p) {
        if (!peek_punct(p)) return false;
        get();
        return true;
    }

    std::string identifier(const char* what) {
        const Token& t = peek();
        if (t.kind != Tok::Ident) fail(std::string("expected ") + what + ", found " + describe(t));
        if (kKeywords.count(t.text)) fail(std::string("expected ") + what + ", found keyword '" + t.text + "'");
        if (!opts_.allow_reserved && t.text[0] == '_')
            fail("identifier '" + t.text + "' starts with '_', which is reserved for generated names");
        return get().text;
    }

    int natural(const char* what) {
        const Token& t = peek();
        if (t.kind != Tok::Number) fail(std::string("expected ") + what + ", found " + describe(t));
        if (t.text.size() > 6) fail(std::string(what) + " too large");
        return std::stoi(get().text);
    }

    void declaration() {
        bool so = get().text == "sovar";
        do {
            const Token& at = peek();
            std::string name = identifier(so ? "SO variable name" : "constant name");
            if (is_reserved_name(name)) fail_at(at, "'" + name + "' is a built-in symbol");
            if (so) {
                expect(":");
                int r = natural("arity");
                expect("^");
                int k = natural("exponent");
                if (r < 1) fail_at(at, "SO variable arity must be >= 1");
                auto [it, fresh] = declared_so_.emplace(name, SOVar{name, r, k});
                if (!fresh && !(it->second == SOVar{name, r, k})) fail_at(at, "conflicting declaration of " + name);
            } else {
                declared_const_.insert(name);
            }
        } while (accept(","));
        expect(";");
    }

    Formula formula() {
        std::vector<Formula> parts{conjunction()};
        while (accept("|")) parts.push_back(conjunction());
        return parts.size() == 1 ? parts[0] : Formula::or_node(std::move(parts));
    }

    Formula conjunction() {
        std::vector<Formula> parts{unary()};
        while (accept("&")) parts.push_back(unary());
        return parts.size() == 1 ? parts[0] : Formula::and_node(std::move(parts));
    }

    Formula unary() {
        if (peek_ident("exists") || peek_ident("forall")) return quantified();
        if (accept("(")) {
            Formula f = formula();
            expect(")");
            return f;
        }
        if (peek_punct("@")) return macro();
        if (peek_punct("!")) {
            const Token& bang = get();
            if (peek().kind != Tok::Ident || !peek_punct("(", 1))
                fail_at(bang, "negation applies only to atoms R(...) or X(...); write t != t for disequality");
            return application(true);
        }
        if (peek().kind == Tok::Ident && peek_punct("(", 1)) return application(false);
        if (peek().kind == Tok::Ident) {
            Term a = term();
            bool neq;
            if (accept("=")) {
                neq = false;
            } else if (accept("!=")) {
                neq = true;
            } else {
                fail("expected '=' or '!=' after term, found " + describe(peek()));
            }
            Term b = term();
            return Formula::equal(std::move(a), std::move(b), neq);
        }
        fail("expected a formula, found " + describe(peek()));
    }

    Formula quantified() {
        const Token& q = get();
        bool ex = q.text == "exists";
        if (!ex && peek_punct("(")) {
            get();
            std::vector<std::string> vars{identifier("variable")};
            while (accept(",")) vars.push_back(identifier("variable"));
            expect(")");
            if (!peek_ident("in")) fail("expected 'in' after restricted universal variables");
            get();
            const Token& gt = peek();
            std::string gname = identifier("guard SO variable");
            auto guard = lookup_so(gname);
            if (!guard) fail_at(gt, "guard '" + gname + "' is not a declared or bound SO variable");
            if (guard->arity != static_cast<int>(vars.size()))
                fail_at(gt, "arity mismatch: guard " + format_sovar(*guard) + " with " + std::to_string(vars.size()) +
                                " variables");
            expect(".");
            for (const auto& v : vars) fo_scope_.push_back(v);
            Formula body = formula();
            fo_scope_.resize(fo_scope_.size() - vars.size());
            return Formula::forall_in(std::move(vars), *guard, std::move(body));
        }
        const Token& vt = peek();
        std::string first = identifier("variable");
        if (accept(":")) {
            int r = natural("arity");
            expect("^");
            int k = natural("exponent");
            if (r < 1) fail_at(vt, "SO variable arity must be >= 1");
            expect(".");
            SOVar x{first, r, k};
            so_scope_.push_back(x);
            Formula body = formula();
            so_scope_.pop_back();
            return ex ? Formula::exists_so(x, std::move(body)) : Formula::forall_so(x, std::move(body));
        }
        if (!ex)
            fail_at(q, "unbounded universal first-order quantifier; write 'forall (" + first +
                           ") in X . ...' with a guard, or 'forall X:1^0 . forall (" + first + ") in X . ...'");
        std::vector<std::string> vars{first};
        while (accept(",")) vars.push_back(identifier("variable"));
        expect(".");
        for (const auto& v : vars) fo_scope_.push_back(v);
        Formula body = formula();
        fo_scope_.resize(fo_scope_.size() - vars.size());
        return Formula::exists(vars, std::move(body));
    }

    std::optional<SOVar> lookup_so(const std::string& name) const {
        for (auto it = so_scope_.rbegin(); it != so_scope_.rend(); ++it)
            if (it->name == name) return *it;
        auto d = declared_so_.find(name);
        if (d != declared_so_.end()) return d->second;
        return std::nullopt;
    }

    Term resolve_term(const Token& at, const std::string& name) const {
        for (auto it = fo_scope_.rbegin(); it != fo_scope_.rend(); ++it)
            if (*it == name) return Term::var(name);
        if (auto b = builtin_from_name(name)) {
            if (builtin_is_relation(*b)) fail_at(at, "'" + name + "' is a relation, not a term");
            return Term::constant(name);
        }
        if (declared_const_.count(name) || (opts_.vocab && opts_.vocab->has_constant(name))) return Term::constant(name);
        return Term::var(name);
    }

    Term term() {
        const Token& at = peek();
        std::string name = identifier("term");
        return resolve_term(at, name);
    }

    Formula application(bool negated) {
        const Token& at = peek();
        std::string name = identifier("relation or SO variable");
        expect("(");
        std::vector<Term> args;
        if (!peek_punct(")")) {
            args.push_back(term());
            while (accept(",")) args.push_back(term());
        }
        expect(")");
        if (auto x = lookup_so(name)) {
            if (x->arity != static_cast<int>(args.size()))
                fail_at(at, "arity mismatch: " + format_sovar(*x) + " applied to " + std::to_string(args.size()) +
                                " terms");
            return Formula::so_atom(*x, std::move(args), negated);
        }
        int arity = static_cast<int>(args.size());
        if (auto b = builtin_from_name(name)) {
            if (!builtin_is_relation(*b)) fail_at(at, "'" + name + "' is a constant, not a relation");
            if (arity != 2) fail_at(at, name + " takes two arguments");
        } else if (opts_.vocab) {
            auto a = opts_.vocab->relation_arity(name);
            if (!a) fail_at(at, "unknown relation or SO variable '" + name + "'");
            if (*a != arity)
                fail_at(at, "arity mismatch: relation " + name + " has arity " + std::to_string(*a) + ", used with " +
                                std::to_string(arity));
        } else {
            if (arity == 0) fail_at(at, "relation atom without arguments");
            auto [it, fresh] = rel_arity_.emplace(name, arity);
            if (!fresh && it->second != arity) fail_at(at, "arity mismatch: relation " + name + " used with two arities");
        }
        return Formula::rel_atom(name, std::move(args), negated);
    }

    Formula macro() {
        const Token& at = get(); // '@'
        std::string name = identifier("macro name");
        auto sig = stdlib::macro_signature(name);
        if (!sig) fail_at(at, "unknown macro @" + name);
        int k = 0;
        if (accept("{")) {
            k = natural("exponent");
            expect("}");
        }
        if (stdlib::macro_takes_k(name) && k < 1) fail_at(at, "macro @" + name + " needs an exponent {k} with k >= 1");
        if (!stdlib::macro_takes_k(name) && k != 0 && name != "CLIQUE")
            fail_at(at, "macro @" + name + " takes no exponent");
        if (name == "CLIQUE" && k < 1) fail_at(at, "macro @CLIQUE needs an exponent {k} with k >= 1");
        expect("(");
        std::vector<stdlib::MacroArg> args;
        std::size_t expected_count = 0;
        for (char c : *sig) expected_count += c == 'K' ? static_cast<std::size_t>(k) : 1;
        std::vector<char> kinds;
        for (char c : *sig)
            for (std::size_t i = 0; i < (c == 'K' ? static_cast<std::size_t>(k) : 1); ++i) kinds.push_back(c);
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (i) expect(",");
            const Token& argt = peek();
            std::string arg = identifier("macro argument");
            stdlib::MacroArg a;
            if (kinds[i] == 'S') {
                auto x = lookup_so(arg);
                if (!x) fail_at(argt, "macro argument '" + arg + "' must be a declared or bound SO variable");
                a.is_so = true;
                a.so = *x;
            } else {
                a.term = resolve_term(argt, arg);
            }
            args.push_back(std::move(a));
        }
        if (!peek_punct(")"))
            fail("macro @" + name + " takes " + std::to_string(expected_count) + " arguments, found " + describe(peek()));
        expect(")");
        try {
            return stdlib::expand_macro(name, k, args, macro_names_);
        } catch (const FormulaError& e) {
            fail_at(at, std::string("in macro @") + name + ": " + e.what());
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const ParseOptions& opts_;
    NameSupply macro_names_;
    std::map<std::string, SOVar> declared_so_;
    std::set<std::string> declared_const_;
    std::vector<SOVar> so_scope_;
    std::vector<std::string> fo_scope_;
    std::map<std::string, int> rel_arity_;
};

// ---------------------------------------------------------------------------
// Printing

void print_terms(std::ostringstream& out, const std::vector<Term>& ts) {
    out << '(';
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (i) out << ',';
        out << ts[i].name;
    }
    out << ')';
}

void print_node(std::ostringstream& out, const Formula& f) {
    switch (f.kind()) {
    case NodeKind::RelAtom:
        if (f.negated()) out << '!';
        out << f.rel();
        print_terms(out, f.terms());
        return;
    case NodeKind::SOAtom:
        if (f.negated()) out << '!';
        out << f.so().name;
        print_terms(out, f.terms());
        return;
    case NodeKind::Equal:
        out << f.terms()[0].name << (f.negated() ? " != " : " = ") << f.terms()[1].name;
        return;
    case NodeKind::And:
    case NodeKind::Or: {
        const char* op = f.kind() == NodeKind::And ? " & " : " | ";
        for (std::size_t i = 0; i < f.children().size(); ++i) {
            if (i) out << op;
            const Formula& c = f.children()[i];
            bool paren = !c.is_atom();
            if (paren) out << '(';
            print_node(out, c);
            if (paren) out << ')';
        }
        return;
    }
    case NodeKind::ExistsFO:
        out << "exists " << f.vars()[0] << " . ";
        print_node(out, f.body());
        return;
    case NodeKind::ForallIn:
        out << "forall (";
        for (std::size_t i = 0; i < f.vars().size(); ++i) {
            if (i) out << ',';
            out << f.vars()[i];
        }
        out << ") in " << f.so().name << " . ";
        print_node(out, f.body());
        return;
    case NodeKind::ExistsSO:
    case NodeKind::ForallSO:
        out << (f.kind() == NodeKind::ExistsSO ? "exists " : "forall ") << format_sovar(f.so()) << " . ";
        print_node(out, f.body());
        return;
    }
}

} // namespace

Formula parse_formula(std::string_view text, const ParseOptions& opts) {
    Parser p(text, opts);
    return p.parse_file();
}

std::string print_formula(const Formula& f, bool declarations) {
    std::ostringstream out;
    if (declarations) {
        FreeVariables fv = free_variables(f);
        if (!fv.so.empty()) {
            out << "sovar ";
            bool first = true;
            for (const auto& x : fv.so) {
                if (!first) out << ", ";
                first = false;
                out << format_sovar(x);
            }
            out << ";\n";
        }
        if (!fv.constants.empty()) {
            out << "const ";
            bool first = true;
            for (const auto& c : fv.constants) {
                if (!first) out << ", ";
                first = false;
                out << c;
            }
            out << ";\n";
        }
    }
    print_node(out, f);
    return out.str();
}

} // namespace soplog

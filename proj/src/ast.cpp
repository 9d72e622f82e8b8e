#include "soplog/ast.hpp"

#include "soplog/error.hpp"

#include <algorithm>
#include <functional>

namespace soplog {

std::vector<Term> var_terms(const std::vector<std::string>& names) {
    std::vector<Term> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(Term::var(n));
    return out;
}

bool SOVar::operator<(const SOVar& o) const {
    if (name != o.name) return name < o.name;
    if (arity != o.arity) return arity < o.arity;
    return exponent < o.exponent;
}

std::string format_sovar(const SOVar& v) {
    return v.name + ":" + std::to_string(v.arity) + "^" + std::to_string(v.exponent);
}

// ---------------------------------------------------------------------------
// Construction

Formula Formula::make(Node n) { return Formula(std::make_shared<const Node>(std::move(n))); }

Formula Formula::rel_atom(std::string rel, std::vector<Term> terms, bool negated) {
    Node n{NodeKind::RelAtom};
    n.rel = std::move(rel);
    n.terms = std::move(terms);
    n.negated = negated;
    return make(std::move(n));
}

Formula Formula::equal(Term a, Term b, bool negated) {
    Node n{NodeKind::Equal};
    n.terms = {std::move(a), std::move(b)};
    n.negated = negated;
    return make(std::move(n));
}

Formula Formula::so_atom(SOVar x, std::vector<Term> terms, bool negated) {
    if (static_cast<int>(terms.size()) != x.arity)
        throw FormulaError("arity mismatch: " + format_sovar(x) + " applied to " + std::to_string(terms.size()) +
                           " terms");
    Node n{NodeKind::SOAtom};
    n.so = std::move(x);
    n.terms = std::move(terms);
    n.negated = negated;
    return make(std::move(n));
}

Formula Formula::truth() { return equal(Term::constant("ZERO"), Term::constant("ZERO")); }
Formula Formula::falsity() { return equal(Term::constant("ZERO"), Term::constant("ZERO"), true); }

namespace {

Formula build_nary(NodeKind kind, std::vector<Formula> parts, bool splice) {
    std::vector<Formula> kids;
    for (auto& p : parts) {
        if (!p.valid()) throw FormulaError("empty formula in connective");
        if (splice && p.kind() == kind) {
            for (const auto& c : p.children()) kids.push_back(c);
        } else {
            kids.push_back(std::move(p));
        }
    }
    if (kids.empty()) return kind == NodeKind::And ? Formula::truth() : Formula::falsity();
    if (kids.size() == 1) return kids.front();
    Formula::Node n{kind};
    n.children = std::move(kids);
    return kind == NodeKind::And ? Formula::and_node(n.children) : Formula::or_node(n.children);
}

} // namespace

Formula Formula::conj(std::vector<Formula> parts) { return build_nary(NodeKind::And, std::move(parts), true); }
Formula Formula::disj(std::vector<Formula> parts) { return build_nary(NodeKind::Or, std::move(parts), true); }

Formula Formula::and_node(std::vector<Formula> parts) {
    if (parts.size() < 2) throw FormulaError("conjunction needs at least two operands");
    Node n{NodeKind::And};
    n.children = std::move(parts);
    return make(std::move(n));
}

Formula Formula::or_node(std::vector<Formula> parts) {
    if (parts.size() < 2) throw FormulaError("disjunction needs at least two operands");
    Node n{NodeKind::Or};
    n.children = std::move(parts);
    return make(std::move(n));
}

Formula Formula::exists(std::string var, Formula body) {
    Node n{NodeKind::ExistsFO};
    n.vars = {std::move(var)};
    n.children = {std::move(body)};
    return make(std::move(n));
}

Formula Formula::exists(const std::vector<std::string>& vars, Formula body) {
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) body = exists(*it, std::move(body));
    return body;
}

Formula Formula::forall_in(std::vector<std::string> vars, SOVar guard, Formula body) {
    if (static_cast<int>(vars.size()) != guard.arity)
        throw FormulaError("restricted universal over " + std::to_string(vars.size()) + " variables guarded by " +
                           format_sovar(guard));
    Node n{NodeKind::ForallIn};
    n.vars = std::move(vars);
    n.so = std::move(guard);
    n.children = {std::move(body)};
    return make(std::move(n));
}

Formula Formula::exists_so(SOVar x, Formula body) {
    Node n{NodeKind::ExistsSO};
    n.so = std::move(x);
    n.children = {std::move(body)};
    return make(std::move(n));
}

Formula Formula::forall_so(SOVar x, Formula body) {
    Node n{NodeKind::ForallSO};
    n.so = std::move(x);
    n.children = {std::move(body)};
    return make(std::move(n));
}

bool Formula::is_atom() const {
    auto k = kind();
    return k == NodeKind::RelAtom || k == NodeKind::Equal || k == NodeKind::SOAtom;
}

bool Formula::is_quantifier() const {
    auto k = kind();
    return k == NodeKind::ExistsFO || k == NodeKind::ForallIn || k == NodeKind::ExistsSO || k == NodeKind::ForallSO;
}

bool Formula::operator==(const Formula& o) const {
    if (node_ == o.node_) return true;
    if (!node_ || !o.node_) return false;
    const Node& a = *node_;
    const Node& b = *o.node_;
    return a.kind == b.kind && a.negated == b.negated && a.rel == b.rel && a.terms == b.terms && a.so == b.so &&
           a.vars == b.vars && a.children == b.children;
}

// ---------------------------------------------------------------------------
// Variables

namespace {

void collect_free(const Formula& f, std::vector<std::string>& fo_bound, std::vector<std::string>& so_bound,
                  FreeVariables& out) {
    auto fo_is_bound = [&](const std::string& v) {
        return std::find(fo_bound.begin(), fo_bound.end(), v) != fo_bound.end();
    };
    auto so_is_bound = [&](const std::string& v) {
        return std::find(so_bound.begin(), so_bound.end(), v) != so_bound.end();
    };
    auto terms = [&](const std::vector<Term>& ts) {
        for (const auto& t : ts) {
            if (t.is_var()) {
                if (!fo_is_bound(t.name)) out.fo.insert(t.name);
            } else if (!is_reserved_name(t.name)) {
                out.constants.insert(t.name);
            }
        }
    };
    switch (f.kind()) {
    case NodeKind::RelAtom:
    case NodeKind::Equal: terms(f.terms()); break;
    case NodeKind::SOAtom:
        terms(f.terms());
        if (!so_is_bound(f.so().name)) out.so.insert(f.so());
        break;
    case NodeKind::And:
    case NodeKind::Or:
        for (const auto& c : f.children()) collect_free(c, fo_bound, so_bound, out);
        break;
    case NodeKind::ExistsFO:
    case NodeKind::ForallIn:
        if (f.kind() == NodeKind::ForallIn && !so_is_bound(f.so().name)) out.so.insert(f.so());
        for (const auto& v : f.vars()) fo_bound.push_back(v);
        collect_free(f.body(), fo_bound, so_bound, out);
        fo_bound.resize(fo_bound.size() - f.vars().size());
        break;
    case NodeKind::ExistsSO:
    case NodeKind::ForallSO:
        so_bound.push_back(f.so().name);
        collect_free(f.body(), fo_bound, so_bound, out);
        so_bound.pop_back();
        break;
    }
}

} // namespace

FreeVariables free_variables(const Formula& f) {
    FreeVariables out;
    std::vector<std::string> fo, so;
    collect_free(f, fo, so, out);
    return out;
}

namespace {

struct Binder {
    std::string orig;
    std::string renamed;
};

class Renamer {
public:
    explicit Renamer(const std::map<std::string, std::string>& m) : map_(m) {}

    Formula run(const Formula& f) {
        switch (f.kind()) {
        case NodeKind::RelAtom: return Formula::rel_atom(f.rel(), terms(f.terms()), f.negated());
        case NodeKind::Equal: {
            auto ts = terms(f.terms());
            return Formula::equal(ts[0], ts[1], f.negated());
        }
        case NodeKind::SOAtom: return Formula::so_atom(so_use(f.so()), terms(f.terms()), f.negated());
        case NodeKind::And:
        case NodeKind::Or: {
            std::vector<Formula> kids;
            for (const auto& c : f.children()) kids.push_back(run(c));
            return f.kind() == NodeKind::And ? Formula::and_node(std::move(kids)) : Formula::or_node(std::move(kids));
        }
        case NodeKind::ExistsFO:
        case NodeKind::ForallIn: {
            SOVar guard = f.kind() == NodeKind::ForallIn ? so_use(f.so()) : SOVar{};
            std::vector<std::string> vars;
            for (const auto& v : f.vars()) {
                vars.push_back(rename(v));
                fo_.push_back({v, vars.back()});
            }
            // A binder whose new name already labels a free occurrence inside would capture it.
            Formula body = run(f.body());
            fo_.resize(fo_.size() - f.vars().size());
            if (f.kind() == NodeKind::ExistsFO) return Formula::exists(vars[0], body);
            return Formula::forall_in(vars, guard, body);
        }
        case NodeKind::ExistsSO:
        case NodeKind::ForallSO: {
            SOVar x = f.so();
            x.name = rename(x.name);
            so_.push_back({f.so().name, x.name});
            Formula body = run(f.body());
            so_.pop_back();
            return f.kind() == NodeKind::ExistsSO ? Formula::exists_so(x, body) : Formula::forall_so(x, body);
        }
        }
        throw FormulaError("unreachable");
    }

private:
    std::string rename(const std::string& v) const {
        auto it = map_.find(v);
        return it == map_.end() ? v : it->second;
    }

    // Resolves an occurrence against a binder stack and checks that the new
    // name still resolves to the same binder.
    std::string resolve(const std::string& v, const std::vector<Binder>& stack) const {
        int idx = -1;
        for (int i = static_cast<int>(stack.size()) - 1; i >= 0; --i)
            if (stack[i].orig == v) {
                idx = i;
                break;
            }
        std::string target = idx >= 0 ? stack[idx].renamed : rename(v);
        for (int i = static_cast<int>(stack.size()) - 1; i > idx; --i)
            if (stack[i].renamed == target)
                throw CaptureError("renaming captures '" + v + "' as '" + target + "'");
        return target;
    }

    std::vector<Term> terms(const std::vector<Term>& ts) const {
        std::vector<Term> out;
        for (const auto& t : ts) out.push_back(t.is_var() ? Term::var(resolve(t.name, fo_)) : t);
        return out;
    }

    SOVar so_use(const SOVar& x) const {
        SOVar y = x;
        y.name = resolve(x.name, so_);
        return y;
    }

    const std::map<std::string, std::string>& map_;
    std::vector<Binder> fo_;
    std::vector<Binder> so_;
};

} // namespace

Formula substitute(const Formula& f, const std::map<std::string, std::string>& renaming) {
    return Renamer(renaming).run(f);
}

std::set<std::string> used_names(const Formula& f) {
    std::set<std::string> out;
    std::function<void(const Formula&)> go = [&](const Formula& g) {
        for (const auto& t : g.terms()) out.insert(t.name);
        for (const auto& v : g.vars()) out.insert(v);
        if (g.kind() == NodeKind::SOAtom || g.kind() == NodeKind::ForallIn || g.is_so_quantifier())
            out.insert(g.so().name);
        for (const auto& c : g.children()) go(c);
    };
    go(f);
    return out;
}

// ---------------------------------------------------------------------------
// Validation and metrics

namespace {

void validate_rec(const Formula& f, const Vocabulary* vocab, std::map<std::string, std::vector<SOVar>>& so_scope,
                  std::map<std::string, SOVar>& free_so, std::map<std::string, int>& rel_arity) {
    if (!f.valid()) throw FormulaError("empty formula node");
    auto check_so = [&](const SOVar& x) {
        if (x.arity < 1) throw FormulaError("SO variable " + x.name + " must have arity >= 1");
        if (x.exponent < 0) throw FormulaError("SO variable " + x.name + " must have exponent >= 0");
        auto it = so_scope.find(x.name);
        if (it != so_scope.end() && !it->second.empty()) {
            if (!(it->second.back() == x))
                throw FormulaError("SO variable " + x.name + " used as " + format_sovar(x) + " but bound as " +
                                   format_sovar(it->second.back()));
            return;
        }
        auto [fit, fresh] = free_so.emplace(x.name, x);
        if (!fresh && !(fit->second == x))
            throw FormulaError("free SO variable " + x.name + " used with two shapes: " + format_sovar(fit->second) +
                               " and " + format_sovar(x));
    };
    auto check_terms = [&](const std::vector<Term>& ts) {
        for (const auto& t : ts) {
            if (t.name.empty()) throw FormulaError("empty term name");
            if (!t.is_var() && vocab && !is_reserved_name(t.name) && !vocab->has_constant(t.name))
                throw FormulaError("unknown constant " + t.name);
            if (!t.is_var()) {
                auto b = builtin_from_name(t.name);
                if (b && builtin_is_relation(*b)) throw FormulaError(t.name + " is a relation, not a constant");
            }
        }
    };
    switch (f.kind()) {
    case NodeKind::RelAtom: {
        check_terms(f.terms());
        int arity = static_cast<int>(f.terms().size());
        if (auto b = builtin_from_name(f.rel())) {
            if (!builtin_is_relation(*b)) throw FormulaError(f.rel() + " is a constant, not a relation");
            if (arity != 2) throw FormulaError(f.rel() + " takes two arguments");
        } else if (vocab) {
            auto a = vocab->relation_arity(f.rel());
            if (!a) throw FormulaError("unknown relation " + f.rel());
            if (*a != arity) throw FormulaError("arity mismatch at relation " + f.rel());
        } else {
            auto [it, fresh] = rel_arity.emplace(f.rel(), arity);
            if (!fresh && it->second != arity) throw FormulaError("relation " + f.rel() + " used with two arities");
        }
        if (arity < 1) throw FormulaError("relation atom without arguments");
        break;
    }
    case NodeKind::Equal:
        if (f.terms().size() != 2) throw FormulaError("equality needs two terms");
        check_terms(f.terms());
        break;
    case NodeKind::SOAtom:
        check_terms(f.terms());
        check_so(f.so());
        if (static_cast<int>(f.terms().size()) != f.so().arity)
            throw FormulaError("arity mismatch at SO atom " + f.so().name);
        break;
    case NodeKind::And:
    case NodeKind::Or:
        if (f.children().size() < 2) throw FormulaError("connective with fewer than two operands");
        for (const auto& c : f.children()) validate_rec(c, vocab, so_scope, free_so, rel_arity);
        break;
    case NodeKind::ExistsFO:
        if (f.vars().size() != 1 || f.vars()[0].empty()) throw FormulaError("existential binds exactly one variable");
        if (f.children().size() != 1) throw FormulaError("quantifier needs one body");
        validate_rec(f.body(), vocab, so_scope, free_so, rel_arity);
        break;
    case NodeKind::ForallIn:
        check_so(f.so());
        if (static_cast<int>(f.vars().size()) != f.so().arity)
            throw FormulaError("restricted universal arity mismatch with guard " + f.so().name);
        if (f.children().size() != 1) throw FormulaError("quantifier needs one body");
        validate_rec(f.body(), vocab, so_scope, free_so, rel_arity);
        break;
    case NodeKind::ExistsSO:
    case NodeKind::ForallSO:
        if (f.so().arity < 1 || f.so().exponent < 0) throw FormulaError("bad SO quantifier shape " + format_sovar(f.so()));
        if (f.children().size() != 1) throw FormulaError("quantifier needs one body");
        so_scope[f.so().name].push_back(f.so());
        validate_rec(f.body(), vocab, so_scope, free_so, rel_arity);
        so_scope[f.so().name].pop_back();
        break;
    }
}

} // namespace

void validate(const Formula& f, const Vocabulary* vocab) {
    std::map<std::string, std::vector<SOVar>> scope;
    std::map<std::string, SOVar> free_so;
    std::map<std::string, int> rel_arity;
    validate_rec(f, vocab, scope, free_so, rel_arity);
}

std::size_t formula_size(const Formula& f) {
    std::size_t s = 1;
    for (const auto& c : f.children()) s += formula_size(c);
    return s;
}

int quantifier_depth(const Formula& f) {
    int d = 0;
    for (const auto& c : f.children()) d = std::max(d, quantifier_depth(c));
    return f.is_quantifier() ? d + 1 : d;
}

// ---------------------------------------------------------------------------
// Names and negation

void NameSupply::avoid(const Formula& f) {
    for (const auto& n : used_names(f)) used_.insert(n);
}

std::string NameSupply::fresh() {
    while (true) {
        std::string name = prefix_ + std::to_string(next_++);
        if (used_.insert(name).second) return name;
    }
}

std::string NameSupply::fresh(const std::string& hint) {
    while (true) {
        std::string name = prefix_ + hint + std::to_string(next_++);
        if (used_.insert(name).second) return name;
    }
}

Formula negate(const Formula& f, NameSupply& names) {
    switch (f.kind()) {
    case NodeKind::RelAtom: return Formula::rel_atom(f.rel(), f.terms(), !f.negated());
    case NodeKind::Equal: return Formula::equal(f.terms()[0], f.terms()[1], !f.negated());
    case NodeKind::SOAtom: return Formula::so_atom(f.so(), f.terms(), !f.negated());
    case NodeKind::And:
    case NodeKind::Or: {
        std::vector<Formula> kids;
        for (const auto& c : f.children()) kids.push_back(negate(c, names));
        return f.kind() == NodeKind::And ? Formula::or_node(std::move(kids)) : Formula::and_node(std::move(kids));
    }
    case NodeKind::ExistsFO: {
        SOVar guard{names.fresh(), 1, 0};
        return Formula::forall_so(guard, Formula::forall_in(f.vars(), guard, negate(f.body(), names)));
    }
    case NodeKind::ForallIn: {
        Formula inner = Formula::conj({Formula::so_atom(f.so(), var_terms(f.vars())), negate(f.body(), names)});
        return Formula::exists(f.vars(), inner);
    }
    case NodeKind::ExistsSO: return Formula::forall_so(f.so(), negate(f.body(), names));
    case NodeKind::ForallSO: return Formula::exists_so(f.so(), negate(f.body(), names));
    }
    throw FormulaError("unreachable");
}

std::string to_string(const PrefixClass& c) {
    switch (c.kind) {
    case PrefixClass::Kind::Sigma:
        return "Sigma " + std::to_string(c.m);
    case PrefixClass::Kind::Pi:
        return "Pi " + std::to_string(c.m);
    case PrefixClass::Kind::NotQNF:
        break;
    }
    return "NotQNF";
}

} // namespace soplog

#pragma once

#include "soplog/structure.hpp"

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace soplog {

struct Term {
    enum class Kind : std::uint8_t { Variable, Constant };
    Kind kind = Kind::Variable;
    std::string name;

    static Term var(std::string name) { return {Kind::Variable, std::move(name)}; }
    static Term constant(std::string name) { return {Kind::Constant, std::move(name)}; }
    bool is_var() const { return kind == Kind::Variable; }

    bool operator==(const Term&) const = default;
};

std::vector<Term> var_terms(const std::vector<std::string>& names);

struct SOVar {
    std::string name;
    int arity = 1;
    int exponent = 0;

    bool operator==(const SOVar&) const = default;
    bool operator<(const SOVar& o) const;
};

std::string format_sovar(const SOVar& v); // X:2^1

enum class NodeKind { RelAtom, Equal, SOAtom, And, Or, ExistsFO, ForallIn, ExistsSO, ForallSO };

// Immutable, structurally shared wff. And/Or carry two or more children.
// Negation exists only on atoms (RelAtom, Equal, SOAtom).
class Formula {
public:
    struct Node {
        NodeKind kind;
        bool negated = false;
        std::string rel;                // RelAtom
        std::vector<Term> terms;        // atoms
        SOVar so;                       // SOAtom, ForallIn guard, ExistsSO/ForallSO
        std::vector<std::string> vars;  // ExistsFO (one), ForallIn (tuple)
        std::vector<Formula> children;  // And/Or, quantifier body at [0]
    };

    Formula() = default;

    static Formula rel_atom(std::string rel, std::vector<Term> terms, bool negated = false);
    static Formula equal(Term a, Term b, bool negated = false);
    static Formula so_atom(SOVar x, std::vector<Term> terms, bool negated = false);
    // n-ary connectives; nested children of the same kind are spliced in.
    // conj({}) is `ZERO = ZERO`; disj({}) is `ZERO != ZERO`; one child is returned as is.
    static Formula conj(std::vector<Formula> parts);
    static Formula disj(std::vector<Formula> parts);
    // Non-splicing constructors used by the parser to keep grouping.
    static Formula and_node(std::vector<Formula> parts);
    static Formula or_node(std::vector<Formula> parts);
    static Formula exists(std::string var, Formula body);
    static Formula exists(const std::vector<std::string>& vars, Formula body);
    static Formula forall_in(std::vector<std::string> vars, SOVar guard, Formula body);
    static Formula exists_so(SOVar x, Formula body);
    static Formula forall_so(SOVar x, Formula body);
    static Formula truth();
    static Formula falsity();

    bool valid() const { return node_ != nullptr; }
    NodeKind kind() const { return node_->kind; }
    bool negated() const { return node_->negated; }
    const std::string& rel() const { return node_->rel; }
    const std::vector<Term>& terms() const { return node_->terms; }
    const SOVar& so() const { return node_->so; }
    const std::vector<std::string>& vars() const { return node_->vars; }
    const std::vector<Formula>& children() const { return node_->children; }
    const Formula& body() const { return node_->children.front(); }
    const Node* node() const { return node_.get(); }

    bool is_atom() const;
    bool is_quantifier() const;
    bool is_so_quantifier() const { return kind() == NodeKind::ExistsSO || kind() == NodeKind::ForallSO; }

    // Structural equality.
    bool operator==(const Formula& o) const;

private:
    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Formula make(Node n);
    std::shared_ptr<const Node> node_;
};

struct FreeVariables {
    std::set<std::string> fo;
    std::set<SOVar> so;
    std::set<std::string> constants; // non-built-in constant symbols used in terms
};

FreeVariables free_variables(const Formula& f);

// Renames variables (bound and free occurrences alike). Throws CaptureError
// when a renamed occurrence would be bound by a different binder.
Formula substitute(const Formula& f, const std::map<std::string, std::string>& renaming);

// Every variable name (FO and SO, bound or free) and constant symbol used.
std::set<std::string> used_names(const Formula& f);

// Checks the wff invariants independently of the constructors:
// arities, SO variable consistency, connective widths. Throws FormulaError.
void validate(const Formula& f, const Vocabulary* vocab = nullptr);

std::size_t formula_size(const Formula& f);
int quantifier_depth(const Formula& f);

// Prefix class of a sentence in quantifier-prefix normal form. Sigma with
// m = 0 marks a sentence without SO quantifiers.
struct PrefixClass {
    enum class Kind { Sigma, Pi, NotQNF };
    Kind kind = Kind::NotQNF;
    int m = 0;

    static PrefixClass sigma(int m) { return {Kind::Sigma, m}; }
    static PrefixClass pi(int m) { return {Kind::Pi, m}; }
    static PrefixClass not_qnf() { return {Kind::NotQNF, 0}; }
    bool operator==(const PrefixClass&) const = default;
};

std::string to_string(const PrefixClass& c); // "Sigma 1", "Pi 2", "NotQNF"

// Fresh identifiers `<prefix><N>`, skipping everything registered as used.
class NameSupply {
public:
    explicit NameSupply(std::string prefix = "_m") : prefix_(std::move(prefix)) {}
    void avoid(const Formula& f);
    void avoid(const std::string& name) { used_.insert(name); }
    std::string fresh();
    std::string fresh(const std::string& hint);

private:
    std::string prefix_;
    std::size_t next_ = 0;
    std::set<std::string> used_;
};

// Negation pushed to the atoms. An existential FO quantifier turns into the
// guarded universal `forall X:1^0 . forall (x) in X . ...` with X drawn from `names`.
Formula negate(const Formula& f, NameSupply& names);

struct ParseOptions {
    const Vocabulary* vocab = nullptr;     // checks relation names/arities, resolves constants
    bool allow_reserved = false;           // accept identifiers starting with '_'
    std::string macro_prefix = "_m";       // prefix for names introduced by macro expansion
};

Formula parse_formula(std::string_view text, const ParseOptions& opts = {});

// Free SO variables and non-built-in constants are emitted as declarations
// so that the output parses back to the same AST.
std::string print_formula(const Formula& f, bool declarations = true);

} // namespace soplog

#include "soplog/semantics.hpp"

#include "sat.hpp"
#include "soplog/error.hpp"
#include "text_cursor.hpp"

#include <algorithm>
#include <climits>
#include <deque>
#include <optional>
#include <set>
#include <unordered_map>

namespace soplog {

// ---------------------------------------------------------------------------
// Bounds and enumeration

std::uint64_t so_bound(std::size_t n, int arity, int exponent) {
    std::uint64_t b = sat_pow(log_ceil(n), static_cast<std::uint64_t>(exponent));
    return std::min(b, sat_pow(n, static_cast<std::uint64_t>(arity)));
}

std::uint64_t so_value_count(std::size_t n, int arity, int exponent) {
    std::uint64_t u = sat_pow(n, static_cast<std::uint64_t>(arity));
    std::uint64_t b = so_bound(n, arity, exponent);
    std::uint64_t total = 0;
    // C(u, i) built incrementally; saturate on overflow.
    unsigned __int128 c = 1;
    for (std::uint64_t i = 0; i <= b; ++i) {
        if (i > 0) c = c * (u - i + 1) / i;
        if (c > UINT64_MAX || total + static_cast<std::uint64_t>(c) < total) return UINT64_MAX;
        total += static_cast<std::uint64_t>(c);
    }
    return total;
}

namespace {

Tuple decode_code(std::uint64_t code, std::size_t n, int arity) {
    Tuple t(static_cast<std::size_t>(arity));
    for (int i = arity - 1; i >= 0; --i) {
        t[static_cast<std::size_t>(i)] = static_cast<Element>(code % n);
        code /= n;
    }
    return t;
}

std::uint64_t universe_size(std::size_t n, int arity) {
    std::uint64_t u = sat_pow(n, static_cast<std::uint64_t>(arity));
    if (u >= (std::uint64_t{1} << 62)) throw EvalError("arity " + std::to_string(arity) + " too large for domain size " + std::to_string(n));
    return u;
}

// Advances a strictly increasing index selection in cardinality-then-lex order.
bool next_selection(std::vector<std::uint64_t>& pick, std::uint64_t universe, std::uint64_t bound) {
    std::size_t m = pick.size();
    for (std::size_t i = m; i-- > 0;) {
        if (pick[i] < universe - (m - i)) {
            ++pick[i];
            for (std::size_t j = i + 1; j < m; ++j) pick[j] = pick[j - 1] + 1;
            return true;
        }
    }
    if (m + 1 > bound || m + 1 > universe) return false;
    pick.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) pick[j] = j;
    return true;
}

} // namespace

SOValueEnumerator::SOValueEnumerator(std::size_t n, int arity, int exponent)
    : n_(n), arity_(arity), universe_(universe_size(n, arity)), bound_(so_bound(n, arity, exponent)) {
    if (arity < 1 || exponent < 0) throw EvalError("bad SO variable shape");
}

bool SOValueEnumerator::next(RelationValue& out) {
    if (done_) return false;
    if (!started_) {
        started_ = true;
    } else if (!next_selection(pick_, universe_, bound_)) {
        done_ = true;
        return false;
    }
    std::vector<Tuple> ts;
    ts.reserve(pick_.size());
    for (auto c : pick_) ts.push_back(decode_code(c, n_, arity_));
    out = RelationValue(arity_, std::move(ts));
    return true;
}

std::vector<RelationValue> enumerate_so_values(const Structure& s, int arity, int exponent) {
    SOValueEnumerator e(s.size(), arity, exponent);
    std::vector<RelationValue> out;
    RelationValue r;
    while (e.next(r)) out.push_back(r);
    return out;
}

// ---------------------------------------------------------------------------
// Compiled program

namespace {

enum class CK { Rel, Builtin, Eq, SOAtom, And, Or, ExistsFO, ForallFO, ForallIn, ExistsSO, ForallSO };

struct CTerm {
    bool slot;
    std::uint32_t v;
};

struct CNode {
    CK kind;
    bool neg = false;
    int rel = -1;
    Builtin builtin = Builtin::Leq;
    std::vector<CTerm> args;
    int so = -1; // SOAtom / guard / bound SO slot
    int arity = 0;
    int exponent = 0;
    std::vector<int> fo;
    std::vector<int> kids;
    std::vector<int> free_so; // sorted, SO quantifier nodes only
    bool nested_so = false;
    std::string label;
};

struct Program {
    std::vector<CNode> nodes;
    int root = -1;
    int fo_slots = 0;
    int so_slots = 0;
    std::vector<std::pair<std::string, int>> free_fo;
    std::vector<std::pair<SOVar, int>> free_so;
    std::vector<SOVar> so_decl;
};

class Compiler {
public:
    Compiler(const Structure& s, Program& p) : s_(s), p_(p) {}

    int compile(const Formula& f, std::vector<int>& used_so, bool& has_so) {
        const auto* node = f.node();
        CNode c;
        c.neg = node->negated;
        switch (node->kind) {
        case NodeKind::RelAtom: {
            if (auto b = builtin_from_name(node->rel)) {
                if (!builtin_is_relation(*b) || node->terms.size() != 2)
                    throw EvalError("arity mismatch at atom " + node->rel);
                c.kind = CK::Builtin;
                c.builtin = *b;
            } else {
                c.kind = CK::Rel;
                c.rel = s_.relation_index(node->rel);
                if (c.rel < 0) throw EvalError("relation " + node->rel + " is not in the structure's vocabulary");
                if (s_.vocabulary().relations()[static_cast<std::size_t>(c.rel)].arity != static_cast<int>(node->terms.size()))
                    throw EvalError("arity mismatch at atom " + node->rel);
            }
            for (const auto& t : node->terms) c.args.push_back(term(t));
            break;
        }
        case NodeKind::Equal:
            c.kind = CK::Eq;
            for (const auto& t : node->terms) c.args.push_back(term(t));
            break;
        case NodeKind::SOAtom:
            c.kind = CK::SOAtom;
            c.so = so_slot(node->so);
            c.arity = node->so.arity;
            for (const auto& t : node->terms) c.args.push_back(term(t));
            used_so.push_back(c.so);
            break;
        case NodeKind::And:
        case NodeKind::Or:
            c.kind = node->kind == NodeKind::And ? CK::And : CK::Or;
            for (const auto& k : node->children) c.kids.push_back(compile(k, used_so, has_so));
            break;
        case NodeKind::ExistsFO:
            if (auto id = fo_block(f, false, used_so, has_so)) return *id;
            [[fallthrough]];
        case NodeKind::ForallIn: {
            c.kind = node->kind == NodeKind::ExistsFO ? CK::ExistsFO : CK::ForallIn;
            if (c.kind == CK::ForallIn) {
                c.so = so_slot(node->so);
                c.arity = node->so.arity;
                used_so.push_back(c.so);
            }
            std::map<std::string, int> fresh;
            for (const auto& v : node->vars) {
                auto [it, added] = fresh.try_emplace(v, p_.fo_slots);
                if (added) ++p_.fo_slots;
                c.fo.push_back(it->second);
            }
            for (const auto& [v, slot] : fresh) fo_scope_[v].push_back(slot);
            c.kids.push_back(compile(node->children[0], used_so, has_so));
            for (const auto& [v, slot] : fresh) fo_scope_[v].pop_back();
            break;
        }
        case NodeKind::ExistsSO:
        case NodeKind::ForallSO: {
            if (node->kind == NodeKind::ForallSO && universal_idiom(f))
                if (auto id = fo_block(f, true, used_so, has_so)) return *id;
            c.kind = node->kind == NodeKind::ExistsSO ? CK::ExistsSO : CK::ForallSO;
            int slot = p_.so_slots++;
            p_.so_decl.push_back(node->so);
            c.so = slot;
            c.arity = node->so.arity;
            c.exponent = node->so.exponent;
            c.label = (c.kind == CK::ExistsSO ? "exists " : "forall ") + format_sovar(node->so);
            so_scope_[node->so.name].push_back(slot);
            std::vector<int> inner;
            bool inner_so = false;
            c.kids.push_back(compile(node->children[0], inner, inner_so));
            so_scope_[node->so.name].pop_back();
            std::sort(inner.begin(), inner.end());
            inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
            for (int x : inner)
                if (x != slot) c.free_so.push_back(x);
            c.nested_so = inner_so;
            used_so.insert(used_so.end(), c.free_so.begin(), c.free_so.end());
            has_so = true;
            break;
        }
        }
        p_.nodes.push_back(std::move(c));
        return static_cast<int>(p_.nodes.size() - 1);
    }

private:
    // `forall X:r^0 forall x̄ in X ψ` with X used nowhere else says ψ holds for
    // every x̄; it is what negating an FO existential produces.
    static bool universal_idiom(const Formula& f) {
        if (f.kind() != NodeKind::ForallSO || f.so().exponent != 0) return false;
        const Formula& g = f.body();
        if (g.kind() != NodeKind::ForallIn || g.so().name != f.so().name) return false;
        std::set<std::string> vars(g.vars().begin(), g.vars().end());
        if (vars.size() != g.vars().size()) return false;
        for (const auto& x : free_variables(g.body()).so)
            if (x.name == f.so().name) return false;
        return true;
    }

    // Compiles a block of FO quantifiers of one kind (existential over a
    // conjunction, universal over a disjunction), placing each variable just
    // above the parts that mention it. Returns nothing when already in place.
    std::optional<int> fo_block(const Formula& f, bool universal, std::vector<int>& used_so, bool& has_so) {
        std::vector<std::string> vars;
        const Formula* body = &f;
        for (;;) {
            if (!universal && body->kind() == NodeKind::ExistsFO) {
                vars.push_back(body->vars()[0]);
                body = &body->body();
            } else if (universal && universal_idiom(*body)) {
                const Formula& g = body->body();
                vars.insert(vars.end(), g.vars().begin(), g.vars().end());
                body = &g.body();
            } else {
                break;
            }
        }
        std::set<std::string> distinct(vars.begin(), vars.end());
        if (distinct.size() != vars.size()) return std::nullopt;
        NodeKind junction = universal ? NodeKind::Or : NodeKind::And;
        std::vector<const Formula*> parts, stack{body};
        while (!stack.empty()) {
            const Formula* g = stack.back();
            stack.pop_back();
            if (g->kind() == junction) {
                for (auto it = g->children().rbegin(); it != g->children().rend(); ++it) stack.push_back(&*it);
            } else {
                parts.push_back(g);
            }
        }
        std::vector<int> level(parts.size(), -1);
        std::vector<bool> used(vars.size(), false);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            auto fv = free_variables(*parts[i]).fo;
            for (std::size_t j = 0; j < vars.size(); ++j)
                if (fv.count(vars[j])) {
                    level[i] = static_cast<int>(j);
                    used[j] = true;
                }
        }
        int last = static_cast<int>(vars.size()) - 1;
        bool changed = universal || std::find(used.begin(), used.end(), false) != used.end();
        for (int l : level)
            if (l != last) changed = true;
        if (!changed) return std::nullopt;

        // Parts never mention variables quantified below them, so every slot
        // can be in scope while they compile.
        std::vector<int> slots(vars.size());
        for (std::size_t j = 0; j < vars.size(); ++j) {
            slots[j] = p_.fo_slots++;
            fo_scope_[vars[j]].push_back(slots[j]);
        }
        std::vector<int> compiled;
        for (const Formula* g : parts) compiled.push_back(compile(*g, used_so, has_so));
        for (const auto& v : vars) fo_scope_[v].pop_back();

        CK jk = universal ? CK::Or : CK::And;
        int inner = -1;
        for (int j = last; j >= -1; --j) {
            std::vector<int> here;
            for (std::size_t i = 0; i < parts.size(); ++i)
                if (level[i] == j) here.push_back(compiled[i]);
            if (inner >= 0) here.push_back(inner);
            if (here.empty()) continue;
            int block = here[0];
            if (here.size() > 1) {
                CNode c;
                c.kind = jk;
                c.kids = std::move(here);
                block = push(std::move(c));
            }
            if (j >= 0 && used[static_cast<std::size_t>(j)]) {
                CNode q;
                q.kind = universal ? CK::ForallFO : CK::ExistsFO;
                q.fo = {slots[static_cast<std::size_t>(j)]};
                q.kids = {block};
                block = push(std::move(q));
            }
            inner = block;
        }
        return inner;
    }

    int push(CNode c) {
        p_.nodes.push_back(std::move(c));
        return static_cast<int>(p_.nodes.size() - 1);
    }

    CTerm term(const Term& t) {
        if (t.is_var()) {
            auto it = fo_scope_.find(t.name);
            if (it != fo_scope_.end() && !it->second.empty()) return {true, static_cast<std::uint32_t>(it->second.back())};
            int slot = p_.fo_slots++;
            fo_scope_[t.name].push_back(slot);
            global_fo_.push_back(t.name);
            p_.free_fo.emplace_back(t.name, slot);
            return {true, static_cast<std::uint32_t>(slot)};
        }
        try {
            return {false, s_.constant(t.name)};
        } catch (const StructureError&) {
            throw EvalError("constant " + t.name + " is not interpreted by the structure");
        }
    }

    int so_slot(const SOVar& v) {
        auto it = so_scope_.find(v.name);
        if (it != so_scope_.end() && !it->second.empty()) {
            int slot = it->second.back();
            if (p_.so_decl[static_cast<std::size_t>(slot)].arity != v.arity)
                throw EvalError("arity mismatch at SO variable " + v.name);
            return slot;
        }
        int slot = p_.so_slots++;
        p_.so_decl.push_back(v);
        so_scope_[v.name].push_back(slot);
        p_.free_so.emplace_back(v, slot);
        return slot;
    }

    const Structure& s_;
    Program& p_;
    std::map<std::string, std::vector<int>> fo_scope_;
    std::map<std::string, std::vector<int>> so_scope_;
    std::vector<std::string> global_fo_;
};

using Codes = std::vector<std::uint64_t>;

struct Env {
    std::vector<Element> fo;
    std::vector<const Codes*> so;
    std::vector<int> inst; // grounding instance, -1 when the slot holds a fixed value
};

constexpr std::uint64_t kEnumerateLimit = 64;

class Grounder;

class Evaluator {
public:
    Evaluator(const Structure& s, const Program& p, const EvalOptions& opts, EvalStats& stats)
        : s_(s), p_(p), opts_(opts), st_(stats), n_(s.size()) {
        env_.fo.assign(static_cast<std::size_t>(p.fo_slots), 0);
        env_.so.assign(static_cast<std::size_t>(p.so_slots), nullptr);
        env_.inst.assign(static_cast<std::size_t>(p.so_slots), -1);
        groundable_.assign(p.nodes.size(), -1);
    }

    void bind_fo(int slot, Element e) { env_.fo[static_cast<std::size_t>(slot)] = e; }

    void bind_so(int slot, const RelationValue& r, const SOVar& decl) {
        if (r.arity() != decl.arity && !r.empty())
            throw EvalError("value of " + decl.name + " has arity " + std::to_string(r.arity()) + ", expected " +
                            std::to_string(decl.arity));
        if (r.size() > so_bound(n_, decl.arity, decl.exponent))
            throw EvalError("value of " + format_sovar(decl) + " has " + std::to_string(r.size()) +
                            " tuples, above the bound " + std::to_string(so_bound(n_, decl.arity, decl.exponent)));
        Codes codes;
        for (const auto& t : r.tuples()) {
            if (static_cast<int>(t.size()) != decl.arity) throw EvalError("tuple of wrong arity in value of " + decl.name);
            std::uint64_t c = 0;
            for (Element e : t) {
                if (e >= n_) throw EvalError("element " + std::to_string(e) + " out of range in value of " + decl.name);
                c = c * n_ + e;
            }
            codes.push_back(c);
        }
        std::sort(codes.begin(), codes.end());
        fixed_.push_back(std::move(codes));
        env_.so[static_cast<std::size_t>(slot)] = &fixed_.back();
    }

    bool eval(int id);

    // Truth of an atom whose SO slot (if any) holds a fixed value.
    bool atom_truth(const CNode& c) const {
        switch (c.kind) {
        case CK::Rel: {
            Element args[16];
            std::vector<Element> big;
            Element* a = args;
            if (c.args.size() > 16) {
                big.resize(c.args.size());
                a = big.data();
            }
            for (std::size_t i = 0; i < c.args.size(); ++i) a[i] = value(c.args[i]);
            return s_.holds(c.rel, a) != c.neg;
        }
        case CK::Builtin:
            return builtin_holds(c.builtin, value(c.args[0]), value(c.args[1])) != c.neg;
        case CK::Eq:
            return (value(c.args[0]) == value(c.args[1])) != c.neg;
        case CK::SOAtom: {
            const Codes* v = env_.so[static_cast<std::size_t>(c.so)];
            if (!v) throw EvalError("unassigned SO variable " + p_.so_decl[static_cast<std::size_t>(c.so)].name);
            return std::binary_search(v->begin(), v->end(), code(c)) != c.neg;
        }
        default:
            throw EvalError("internal: not an atom");
        }
    }

    std::uint64_t code(const CNode& c) const {
        std::uint64_t x = 0;
        for (const auto& t : c.args) x = x * n_ + value(t);
        return x;
    }

    Element value(const CTerm& t) const { return t.slot ? env_.fo[t.v] : t.v; }

    void tick() {
        if (++st_.nodes > opts_.budget.max_total_nodes) throw BudgetExceeded("total nodes", st_.nodes);
    }

    // Assigns the bound tuple of a ForallIn node from a code; false when a
    // repeated variable would need two values.
    bool assign_tuple(const CNode& c, std::uint64_t code) {
        Element vals[16];
        std::vector<Element> big;
        Element* v = vals;
        if (c.arity > 16) {
            big.resize(static_cast<std::size_t>(c.arity));
            v = big.data();
        }
        for (int i = c.arity - 1; i >= 0; --i) {
            v[i] = static_cast<Element>(code % n_);
            code /= n_;
        }
        for (int i = 0; i < c.arity; ++i)
            for (int j = 0; j < i; ++j)
                if (c.fo[static_cast<std::size_t>(j)] == c.fo[static_cast<std::size_t>(i)] && v[j] != v[i]) return false;
        for (int i = 0; i < c.arity; ++i) env_.fo[static_cast<std::size_t>(c.fo[static_cast<std::size_t>(i)])] = v[i];
        return true;
    }

    bool groundable(int id);

    const Structure& s_;
    const Program& p_;
    const EvalOptions& opts_;
    EvalStats& st_;
    std::size_t n_;
    Env env_;
    std::deque<Codes> fixed_;
    std::vector<int> groundable_;

private:
    bool eval_so(int id);
    bool enumerate_so(int id);
};

// ---------------------------------------------------------------------------
// Grounding to CNF

class Grounder {
public:
    static constexpr int kTrue = INT_MAX;
    static constexpr int kFalse = -INT_MAX;

    Grounder(Evaluator& ev, bool negated) : ev_(ev), neg_(negated) {}

    bool decide(int id) {
        int root = ground(id, true);
        ++ev_.st_.sat_calls;
        ev_.st_.sat_variables += static_cast<std::uint64_t>(sat_.num_vars());
        ev_.st_.sat_clauses += sat_.num_clauses();
        if (root == kFalse) return false;
        if (root != kTrue) sat_.add_clause({root});
        return sat_.solve();
    }

private:
    static constexpr int kFixedTrue = -1;
    static constexpr int kFixedFalse = -2;

    struct Instance {
        std::uint64_t bound;
        std::unordered_map<std::uint64_t, int> cells; // sat var or a fixed marker
        int fixed_true = 0;
    };

    const CNode& node(int id) const { return ev_.p_.nodes[static_cast<std::size_t>(id)]; }

    static int negate_lit(int l) { return l == kTrue ? kFalse : l == kFalse ? kTrue : -l; }

    // Literal of X(code) in instance `inst`, creating the variable on demand.
    int cell_lit(int inst, std::uint64_t code) {
        auto& in = insts_[static_cast<std::size_t>(inst)];
        auto [it, fresh] = in.cells.try_emplace(code, 0);
        if (fresh) it->second = sat_.new_var();
        if (it->second == kFixedTrue) return kTrue;
        if (it->second == kFixedFalse) return kFalse;
        return it->second;
    }

    // 0 absent, otherwise as stored.
    int cell_peek(int inst, std::uint64_t code) const {
        const auto& in = insts_[static_cast<std::size_t>(inst)];
        auto it = in.cells.find(code);
        return it == in.cells.end() ? 0 : it->second;
    }

    void fix_cell(int inst, std::uint64_t code, bool value) {
        auto& in = insts_[static_cast<std::size_t>(inst)];
        in.cells[code] = value ? kFixedTrue : kFixedFalse;
        if (value) ++in.fixed_true;
    }

    // Asserts `lit`; returns kFalse on an immediate contradiction.
    int assert_lit(int lit) {
        if (lit == kFalse) return kFalse;
        if (lit != kTrue) sat_.add_clause({lit});
        return kTrue;
    }

    int make_and(std::vector<int>& lits, bool top) {
        if (top) {
            for (int l : lits)
                if (assert_lit(l) == kFalse) return kFalse;
            return kTrue;
        }
        std::vector<int> kept;
        for (int l : lits) {
            if (l == kFalse) return kFalse;
            if (l != kTrue) kept.push_back(l);
        }
        if (kept.empty()) return kTrue;
        if (kept.size() == 1) return kept[0];
        int g = sat_.new_var();
        for (int l : kept) sat_.add_clause({-g, l});
        return g;
    }

    int make_or(std::vector<int>& lits, bool top) {
        std::vector<int> kept;
        for (int l : lits) {
            if (l == kTrue) return kTrue;
            if (l != kFalse) kept.push_back(l);
        }
        if (kept.empty()) return kFalse;
        if (top) {
            sat_.add_clause(kept);
            return kTrue;
        }
        if (kept.size() == 1) return kept[0];
        int g = sat_.new_var();
        kept.push_back(-g);
        sat_.add_clause(kept);
        return g;
    }

    // Conjunction in the current mode: And when positive, Or when negated.
    bool conjunctive(CK k) const { return (k == CK::And) != neg_; }

    int ground(int id, bool top) {
        ev_.tick();
        const CNode& c = node(id);
        switch (c.kind) {
        case CK::Rel:
        case CK::Builtin:
        case CK::Eq:
            return (ev_.atom_truth(c) != neg_) ? kTrue : kFalse;
        case CK::SOAtom: {
            int inst = ev_.env_.inst[static_cast<std::size_t>(c.so)];
            if (inst < 0) return (ev_.atom_truth(c) != neg_) ? kTrue : kFalse;
            bool positive = c.neg == neg_; // the atom must hold for the node to hold
            std::uint64_t code = ev_.code(c);
            if (top && cell_peek(inst, code) == 0) {
                fix_cell(inst, code, positive);
                return kTrue;
            }
            int l = cell_lit(inst, code);
            int r = positive ? l : negate_lit(l);
            return top ? assert_lit(r) : r;
        }
        case CK::And:
        case CK::Or: {
            std::vector<int> lits;
            if (conjunctive(c.kind)) {
                for (int k : c.kids) {
                    int l = ground(k, top);
                    if (l == kFalse) return kFalse;
                    lits.push_back(l);
                }
                return make_and(lits, top);
            }
            for (int k : c.kids) {
                int l = ground(k, false);
                if (l == kTrue) return kTrue;
                lits.push_back(l);
            }
            return make_or(lits, top);
        }
        case CK::ExistsFO:
        case CK::ForallFO: {
            std::size_t slot = static_cast<std::size_t>(c.fo[0]);
            std::vector<int> lits;
            bool conj = (c.kind == CK::ForallFO) != neg_;
            for (Element e = 0; e < ev_.n_; ++e) {
                ev_.env_.fo[slot] = e;
                int l = ground(c.kids[0], conj && top);
                if (conj && l == kFalse) return kFalse;
                if (!conj && l == kTrue) return kTrue;
                lits.push_back(l);
            }
            return conj ? make_and(lits, top) : make_or(lits, top);
        }
        case CK::ForallIn:
            return ground_forall_in(c, top);
        case CK::ExistsSO:
        case CK::ForallSO: {
            bool same = (c.kind == CK::ExistsSO) != neg_;
            if (!same) return (ev_.eval(id) != neg_) ? kTrue : kFalse;
            std::size_t slot = static_cast<std::size_t>(c.so);
            universe_size(ev_.n_, c.arity);
            insts_.push_back(Instance{so_bound(ev_.n_, c.arity, c.exponent), {}, 0});
            int inst = static_cast<int>(insts_.size() - 1);
            int saved = ev_.env_.inst[slot];
            ev_.env_.inst[slot] = inst;
            int r = ground(c.kids[0], top);
            ev_.env_.inst[slot] = saved;
            if (r == kFalse) return kFalse;
            if (!at_most(inst)) return kFalse;
            return r;
        }
        }
        return kFalse;
    }

    int ground_forall_in(const CNode& c, bool top) {
        std::size_t guard = static_cast<std::size_t>(c.so);
        int inst = ev_.env_.inst[guard];
        bool conj = !neg_; // forall is a conjunction over the guard's tuples
        std::vector<int> lits;
        if (inst < 0) {
            const Codes* v = ev_.env_.so[guard];
            if (!v) throw EvalError("unassigned SO variable " + ev_.p_.so_decl[guard].name);
            for (std::uint64_t code : *v) {
                if (!ev_.assign_tuple(c, code)) continue;
                int l = ground(c.kids[0], conj && top);
                if (conj && l == kFalse) return kFalse;
                if (!conj && l == kTrue) return kTrue;
                lits.push_back(l);
            }
            return conj ? make_and(lits, top) : make_or(lits, top);
        }
        std::uint64_t u = universe_size(ev_.n_, c.arity);
        for (std::uint64_t code = 0; code < u; ++code) {
            int state = cell_peek(inst, code);
            if (state == kFixedFalse) continue;
            if (!ev_.assign_tuple(c, code)) continue;
            if (state == kFixedTrue) {
                int l = ground(c.kids[0], conj && top);
                if (conj && l == kFalse) return kFalse;
                if (!conj && l == kTrue) return kTrue;
                lits.push_back(l);
                continue;
            }
            int body = ground(c.kids[0], false);
            if (conj) {
                // guard(t) -> body
                if (body == kTrue) continue;
                if (body == kFalse && top && state == 0) {
                    fix_cell(inst, code, false);
                    continue;
                }
                int x = cell_lit(inst, code);
                std::vector<int> pair{-x, body};
                int l = make_or(pair, top);
                if (l == kFalse) return kFalse;
                lits.push_back(l);
            } else {
                // guard(t) & body (body already negated by the mode)
                if (body == kFalse) continue;
                int x = cell_lit(inst, code);
                std::vector<int> pair{x, body};
                int l = make_and(pair, false);
                if (l == kTrue) return kTrue;
                lits.push_back(l);
            }
        }
        return conj ? make_and(lits, top) : make_or(lits, top);
    }

    // Sequential-counter encoding of |X| <= bound over the live cells.
    bool at_most(int inst) {
        auto& in = insts_[static_cast<std::size_t>(inst)];
        if (static_cast<std::uint64_t>(in.fixed_true) > in.bound) return false;
        std::uint64_t k = in.bound - static_cast<std::uint64_t>(in.fixed_true);
        std::vector<int> xs;
        for (const auto& [code, v] : in.cells)
            if (v > 0) xs.push_back(v);
        std::sort(xs.begin(), xs.end());
        std::size_t m = xs.size();
        if (m <= k) return true;
        if (k == 0) {
            for (int x : xs) sat_.add_clause({-x});
            return true;
        }
        std::size_t K = static_cast<std::size_t>(k);
        std::vector<int> prev(K), cur(K);
        for (std::size_t j = 0; j < K; ++j) prev[j] = sat_.new_var();
        sat_.add_clause({-xs[0], prev[0]});
        for (std::size_t j = 1; j < K; ++j) sat_.add_clause({-prev[j]});
        for (std::size_t i = 1; i + 1 < m; ++i) {
            for (std::size_t j = 0; j < K; ++j) cur[j] = sat_.new_var();
            sat_.add_clause({-xs[i], cur[0]});
            sat_.add_clause({-prev[0], cur[0]});
            for (std::size_t j = 1; j < K; ++j) {
                sat_.add_clause({-xs[i], -prev[j - 1], cur[j]});
                sat_.add_clause({-prev[j], cur[j]});
            }
            sat_.add_clause({-xs[i], -prev[K - 1]});
            std::swap(prev, cur);
        }
        sat_.add_clause({-xs[m - 1], -prev[K - 1]});
        return true;
    }

    Evaluator& ev_;
    bool neg_;
    detail::SatSolver sat_;
    std::vector<Instance> insts_;
};

bool Evaluator::groundable(int id) {
    auto& memo = groundable_[static_cast<std::size_t>(id)];
    if (memo >= 0) return memo == 1;
    const CNode& root = p_.nodes[static_cast<std::size_t>(id)];
    CK same = root.kind;
    std::vector<int> grounded;
    bool ok = true;
    // Pass 1: collect same-kind SO slots; pass 2: check opposite nodes.
    std::vector<int> stack{id};
    std::vector<int> opposite;
    while (!stack.empty() && ok) {
        int x = stack.back();
        stack.pop_back();
        const CNode& c = p_.nodes[static_cast<std::size_t>(x)];
        if (c.kind == CK::ExistsSO || c.kind == CK::ForallSO) {
            if (c.kind != same) {
                opposite.push_back(x);
                continue;
            }
            grounded.push_back(c.so);
            std::uint64_t u = sat_pow(n_, static_cast<std::uint64_t>(c.arity));
            if (u > (std::uint64_t{1} << 20)) ok = false;
        }
        for (int k : c.kids) stack.push_back(k);
    }
    std::sort(grounded.begin(), grounded.end());
    for (int x : opposite) {
        if (!ok) break;
        for (int f : p_.nodes[static_cast<std::size_t>(x)].free_so)
            if (std::binary_search(grounded.begin(), grounded.end(), f)) {
                ok = false;
                break;
            }
    }
    memo = ok ? 1 : 0;
    return ok;
}

bool Evaluator::eval(int id) {
    tick();
    const CNode& c = p_.nodes[static_cast<std::size_t>(id)];
    switch (c.kind) {
    case CK::Rel:
    case CK::Builtin:
    case CK::Eq:
    case CK::SOAtom:
        return atom_truth(c);
    case CK::And:
        for (int k : c.kids)
            if (!eval(k)) return false;
        return true;
    case CK::Or:
        for (int k : c.kids)
            if (eval(k)) return true;
        return false;
    case CK::ExistsFO: {
        std::size_t slot = static_cast<std::size_t>(c.fo[0]);
        for (Element e = 0; e < n_; ++e) {
            env_.fo[slot] = e;
            if (eval(c.kids[0])) return true;
        }
        return false;
    }
    case CK::ForallFO: {
        std::size_t slot = static_cast<std::size_t>(c.fo[0]);
        for (Element e = 0; e < n_; ++e) {
            env_.fo[slot] = e;
            if (!eval(c.kids[0])) return false;
        }
        return true;
    }
    case CK::ForallIn: {
        const Codes* v = env_.so[static_cast<std::size_t>(c.so)];
        if (!v) throw EvalError("unassigned SO variable " + p_.so_decl[static_cast<std::size_t>(c.so)].name);
        for (std::uint64_t code : *v) {
            if (!assign_tuple(c, code)) continue;
            if (!eval(c.kids[0])) return false;
        }
        return true;
    }
    case CK::ExistsSO:
    case CK::ForallSO:
        return eval_so(id);
    }
    return false;
}

bool Evaluator::eval_so(int id) {
    const CNode& c = p_.nodes[static_cast<std::size_t>(id)];
    if (opts_.strategy != Strategy::Enumerate && groundable(id)) {
        bool use_sat = opts_.strategy == Strategy::PreferSat || c.nested_so ||
                       so_value_count(n_, c.arity, c.exponent) > kEnumerateLimit;
        if (use_sat) {
            Grounder g(*this, c.kind == CK::ForallSO);
            bool sat = g.decide(id);
            return c.kind == CK::ExistsSO ? sat : !sat;
        }
    }
    return enumerate_so(id);
}

bool Evaluator::enumerate_so(int id) {
    const CNode& c = p_.nodes[static_cast<std::size_t>(id)];
    std::size_t slot = static_cast<std::size_t>(c.so);
    std::uint64_t universe = universe_size(n_, c.arity);
    std::uint64_t bound = so_bound(n_, c.arity, c.exponent);
    bool want = c.kind == CK::ExistsSO;
    std::vector<std::uint64_t> pick;
    Codes value;
    const Codes* saved = env_.so[slot];
    std::uint64_t count = 0;
    bool result = !want;
    do {
        if (++count > opts_.budget.max_candidates_per_quantifier) {
            env_.so[slot] = saved;
            throw BudgetExceeded(c.label, count);
        }
        ++st_.enumerated_candidates;
        value.assign(pick.begin(), pick.end());
        env_.so[slot] = &value;
        if (eval(c.kids[0]) == want) {
            result = want;
            break;
        }
    } while (next_selection(pick, universe, bound));
    env_.so[slot] = saved;
    return result;
}

void prepare(const Structure& s, const Formula& f, Program& p) {
    if (!f.valid()) throw EvalError("empty formula");
    Compiler comp(s, p);
    std::vector<int> used;
    bool has_so = false;
    p.root = comp.compile(f, used, has_so);
}

void bind_valuation(Evaluator& ev, const Program& p, const Valuation& v) {
    for (const auto& [name, slot] : p.free_fo) {
        auto it = v.fo.find(name);
        if (it == v.fo.end()) throw EvalError("unassigned free variable " + name);
        if (it->second >= ev.n_) throw EvalError("value of " + name + " out of range");
        ev.bind_fo(slot, it->second);
    }
    for (const auto& [decl, slot] : p.free_so) {
        auto it = v.so.find(decl.name);
        if (it == v.so.end()) throw EvalError("unassigned free SO variable " + decl.name);
        ev.bind_so(slot, it->second, decl);
    }
}

} // namespace

bool evaluate(const Structure& s, const Formula& f, const Valuation& v, const EvalOptions& opts, EvalStats* stats) {
    Program p;
    prepare(s, f, p);
    EvalStats local;
    EvalStats& st = stats ? *stats : local;
    Evaluator ev(s, p, opts, st);
    bind_valuation(ev, p, v);
    return ev.eval(p.root);
}

bool evaluate_with_witness(const Structure& s, const Formula& f, const Witness& w, const Valuation& v,
                           const EvalOptions& opts, EvalStats* stats) {
    Program p;
    prepare(s, f, p);
    EvalStats local;
    EvalStats& st = stats ? *stats : local;
    Evaluator ev(s, p, opts, st);
    bind_valuation(ev, p, v);
    int id = p.root;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const CNode& c = p.nodes[static_cast<std::size_t>(id)];
        if (c.kind != CK::ExistsSO)
            throw EvalError("witness has " + std::to_string(w.size()) + " values but the leading existential block has " +
                            std::to_string(i));
        const SOVar& decl = p.so_decl[static_cast<std::size_t>(c.so)];
        if (w[i].name != decl.name)
            throw EvalError("witness entry " + std::to_string(i + 1) + " names " + w[i].name + ", quantifier binds " +
                            decl.name);
        for (const auto& t : w[i].tuples)
            if (static_cast<int>(t.size()) != decl.arity)
                throw EvalError("witness value of " + decl.name + " has a tuple of arity " + std::to_string(t.size()) +
                                ", expected " + std::to_string(decl.arity));
        ev.bind_so(c.so, RelationValue(decl.arity, w[i].tuples), decl);
        id = c.kids[0];
    }
    return ev.eval(id);
}

// ---------------------------------------------------------------------------
// Witness files

Witness parse_witness(std::string_view text) {
    detail::TextCursor in(text);
    Witness w;
    for (;;) {
        in.skip_space();
        if (in.at_end()) break;
        std::string kw = in.ident();
        if (kw != "witness") in.fail("expected 'witness'");
        WitnessEntry e;
        e.name = in.ident();
        in.expect('{');
        for (;;) {
            in.skip_space();
            if (in.accept('}')) break;
            in.expect('(');
            Tuple t;
            for (;;) {
                t.push_back(static_cast<Element>(in.number()));
                if (in.accept(')')) break;
                in.expect(',');
            }
            e.tuples.push_back(std::move(t));
        }
        w.push_back(std::move(e));
    }
    return w;
}

std::string format_witness(const Witness& w) {
    std::string out;
    for (const auto& e : w) {
        out += "witness " + e.name + " {";
        for (const auto& t : e.tuples) {
            out += " (";
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (i) out += ",";
                out += std::to_string(t[i]);
            }
            out += ")";
        }
        out += " }\n";
    }
    return out;
}

} // namespace soplog

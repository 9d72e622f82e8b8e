#include "soplog/normalform.hpp"

#include "soplog/error.hpp"

#include <algorithm>

namespace soplog {

namespace {

struct Quant {
    bool exists;
    SOVar var;
};
using Prefix = std::vector<Quant>;

struct Part {
    Prefix prefix;
    Formula matrix;
};

int count_blocks(const Prefix& p) {
    int blocks = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (i == 0 || p[i].exists != p[i - 1].exists) ++blocks;
    return blocks;
}

std::vector<Prefix> split_blocks(const Prefix& p) {
    std::vector<Prefix> out;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i == 0 || p[i].exists != p[i - 1].exists) out.emplace_back();
        out.back().push_back(p[i]);
    }
    return out;
}

bool has_so_quantifier(const Formula& f) {
    if (f.is_so_quantifier()) return true;
    for (const auto& c : f.children())
        if (has_so_quantifier(c)) return true;
    return false;
}

// Gives every SO binder a name of its own, distinct from all free names.
class Renamer {
public:
    Renamer(NameSupply& names, const std::set<std::string>& taken, QnfReport& report)
        : names_(names), seen_(taken), report_(report) {}

    Formula run(const Formula& f) {
        switch (f.kind()) {
        case NodeKind::RelAtom:
        case NodeKind::Equal:
            return f;
        case NodeKind::SOAtom:
            return Formula::so_atom(lookup(f.so()), f.terms(), f.negated());
        case NodeKind::And:
        case NodeKind::Or: {
            std::vector<Formula> kids;
            for (const auto& c : f.children()) kids.push_back(run(c));
            return f.kind() == NodeKind::And ? Formula::and_node(std::move(kids)) : Formula::or_node(std::move(kids));
        }
        case NodeKind::ExistsFO:
            return Formula::exists(f.vars()[0], run(f.body()));
        case NodeKind::ForallIn:
            return Formula::forall_in(f.vars(), lookup(f.so()), run(f.body()));
        case NodeKind::ExistsSO:
        case NodeKind::ForallSO: {
            SOVar v = f.so();
            if (!seen_.insert(v.name).second) {
                v.name = names_.fresh();
                ++report_.renamed;
            }
            scope_[f.so().name].push_back(v.name);
            Formula body = run(f.body());
            scope_[f.so().name].pop_back();
            return f.kind() == NodeKind::ExistsSO ? Formula::exists_so(v, body) : Formula::forall_so(v, body);
        }
        }
        throw FormulaError("unreachable");
    }

private:
    SOVar lookup(SOVar v) const {
        auto it = scope_.find(v.name);
        if (it != scope_.end() && !it->second.empty()) v.name = it->second.back();
        return v;
    }

    NameSupply& names_;
    std::set<std::string> seen_;
    QnfReport& report_;
    std::map<std::string, std::vector<std::string>> scope_;
};

class Prenexer {
public:
    Prenexer(NameSupply& names, QnfReport& report) : names_(names), report_(report) {}

    Part run(const Formula& f) {
        switch (f.kind()) {
        case NodeKind::RelAtom:
        case NodeKind::Equal:
        case NodeKind::SOAtom:
            return {{}, f};
        case NodeKind::And:
        case NodeKind::Or: {
            std::vector<Part> parts;
            for (const auto& c : f.children()) parts.push_back(run(c));
            std::vector<Formula> matrices;
            std::vector<Prefix> prefixes;
            for (auto& p : parts) {
                matrices.push_back(p.matrix);
                prefixes.push_back(std::move(p.prefix));
            }
            Formula m = f.kind() == NodeKind::And ? Formula::and_node(std::move(matrices))
                                                  : Formula::or_node(std::move(matrices));
            return {merge(prefixes), m};
        }
        case NodeKind::ExistsFO: {
            Part p = run(f.body());
            auto first = std::find_if(p.prefix.begin(), p.prefix.end(), [](const Quant& q) { return !q.exists; });
            if (first == p.prefix.end()) return {std::move(p.prefix), Formula::exists(f.vars()[0], p.matrix)};
            // ∃x ∀Y ψ  ≡  ∃X:1^0 ∀Y ∃x (X(x) ∧ ψ)
            SOVar X{names_.fresh(), 1, 0};
            p.prefix.insert(first, Quant{true, X});
            ++report_.exists_swaps;
            Formula m = Formula::and_node({Formula::so_atom(X, {Term::var(f.vars()[0])}), p.matrix});
            return {std::move(p.prefix), Formula::exists(f.vars()[0], m)};
        }
        case NodeKind::ForallIn: {
            Part p = run(f.body());
            auto first = std::find_if(p.prefix.begin(), p.prefix.end(), [](const Quant& q) { return q.exists; });
            if (first == p.prefix.end()) return {std::move(p.prefix), Formula::forall_in(f.vars(), f.so(), p.matrix)};
            // ∀x̄∈G ∃Y ψ  ≡  ∀X:r^0 ∃Y ∀x̄∈X (¬G(x̄) ∨ ψ)
            SOVar X{names_.fresh(), f.so().arity, 0};
            p.prefix.insert(first, Quant{false, X});
            ++report_.forall_swaps;
            Formula m = Formula::or_node({Formula::so_atom(f.so(), var_terms(f.vars()), true), p.matrix});
            return {std::move(p.prefix), Formula::forall_in(f.vars(), X, m)};
        }
        case NodeKind::ExistsSO:
        case NodeKind::ForallSO: {
            Part p = run(f.body());
            p.prefix.insert(p.prefix.begin(), Quant{f.kind() == NodeKind::ExistsSO, f.so()});
            return p;
        }
        }
        throw FormulaError("unreachable");
    }

private:
    // Interleaves sibling prefixes block by block, always taking the polarity
    // at the head of the sibling with the most blocks left.
    Prefix merge(const std::vector<Prefix>& prefixes) {
        std::vector<std::vector<Prefix>> blocks;
        int widest = 0;
        for (const auto& p : prefixes) {
            blocks.push_back(split_blocks(p));
            widest = std::max(widest, static_cast<int>(blocks.back().size()));
        }
        std::vector<std::size_t> pos(blocks.size(), 0);
        Prefix out;
        for (;;) {
            int lead = -1;
            std::size_t most = 0;
            for (std::size_t i = 0; i < blocks.size(); ++i) {
                std::size_t left = blocks[i].size() - pos[i];
                if (left > most) {
                    most = left;
                    lead = static_cast<int>(i);
                }
            }
            if (lead < 0) break;
            bool polarity = blocks[static_cast<std::size_t>(lead)][pos[static_cast<std::size_t>(lead)]][0].exists;
            for (std::size_t i = 0; i < blocks.size(); ++i)
                if (pos[i] < blocks[i].size() && blocks[i][pos[i]][0].exists == polarity) {
                    out.insert(out.end(), blocks[i][pos[i]].begin(), blocks[i][pos[i]].end());
                    ++pos[i];
                }
        }
        report_.merge_penalty += count_blocks(out) - widest;
        return out;
    }

    NameSupply& names_;
    QnfReport& report_;
};

int block_depth(const Formula& f, int blocks, int last) {
    int here = blocks;
    int polarity = last;
    if (f.is_so_quantifier()) {
        polarity = f.kind() == NodeKind::ExistsSO ? 1 : 0;
        if (polarity != last) ++here;
    }
    int best = here;
    for (const auto& c : f.children()) best = std::max(best, block_depth(c, here, polarity));
    return best;
}

} // namespace

int so_block_depth(const Formula& f) { return block_depth(f, 0, -1); }

Formula to_qnf(const Formula& f, QnfReport* report) {
    validate(f);
    FreeVariables free = free_variables(f);
    if (!free.fo.empty() || !free.so.empty()) {
        std::string names;
        for (const auto& x : free.fo) names += (names.empty() ? "" : ", ") + x;
        for (const auto& x : free.so) names += (names.empty() ? "" : ", ") + x.name;
        throw FormulaError("toQNF needs a sentence; free variables: " + names);
    }
    QnfReport local;
    QnfReport& r = report ? *report : local;
    r = QnfReport{};
    r.blocks_before = so_block_depth(f);

    NameSupply names("_q");
    names.avoid(f);
    std::set<std::string> taken;
    Formula renamed = Renamer(names, taken, r).run(f);
    Part p = Prenexer(names, r).run(renamed);

    Formula out = p.matrix;
    for (auto it = p.prefix.rbegin(); it != p.prefix.rend(); ++it)
        out = it->exists ? Formula::exists_so(it->var, out) : Formula::forall_so(it->var, out);
    r.blocks_after = count_blocks(p.prefix);
    return out;
}

PrefixClass classify(const Formula& f) {
    const Formula* cur = &f;
    Prefix prefix;
    while (cur->is_so_quantifier()) {
        prefix.push_back({cur->kind() == NodeKind::ExistsSO, cur->so()});
        cur = &cur->body();
    }
    if (has_so_quantifier(*cur)) return PrefixClass::not_qnf();
    if (prefix.empty()) return PrefixClass::sigma(0);
    int m = count_blocks(prefix);
    return prefix[0].exists ? PrefixClass::sigma(m) : PrefixClass::pi(m);
}

} // namespace soplog

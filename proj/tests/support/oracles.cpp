#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace oracle {

using soplog::Element;
using soplog::Formula;
using soplog::RelationValue;
using soplog::SOVar;
using soplog::Term;
using soplog::Tuple;

std::uint32_t ceil_log2(std::uint64_t n) {
    std::uint32_t l = 0;
    while ((std::uint64_t{1} << l) < n) ++l;
    return l;
}

std::uint64_t binomial_sum(std::uint64_t universe, std::uint64_t bound) {
    // Pascal's triangle row by row; fine for the small universes used in tests.
    std::vector<std::uint64_t> row{1};
    for (std::uint64_t i = 1; i <= universe; ++i) {
        std::vector<std::uint64_t> next(row.size() + 1, 0);
        for (std::size_t j = 0; j < row.size(); ++j) {
            next[j] += row[j];
            next[j + 1] += row[j];
        }
        row = std::move(next);
    }
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i <= std::min(bound, universe); ++i) total += row[i];
    return total;
}

namespace {

std::vector<Tuple> tuples_lex(std::size_t n, int arity) {
    std::vector<Tuple> out{Tuple{}};
    for (int i = 0; i < arity; ++i) {
        std::vector<Tuple> next;
        for (const auto& t : out)
            for (Element e = 0; e < n; ++e) {
                Tuple u = t;
                u.push_back(e);
                next.push_back(u);
            }
        out = next;
    }
    return out;
}

} // namespace

Structure decode_structure(const Vocabulary& vocab, std::size_t n, const soplog::BitString& bits) {
    std::size_t pos = 0;
    std::map<std::string, RelationValue> rels;
    for (const auto& r : vocab.relations()) {
        std::vector<Tuple> members;
        for (const auto& t : tuples_lex(n, r.arity)) {
            if (pos >= bits.size()) throw std::runtime_error("bit string too short");
            if (bits.bits[pos++]) members.push_back(t);
        }
        rels.emplace(r.name, RelationValue(r.arity, members));
    }
    std::map<std::string, Element> consts;
    std::uint32_t width = ceil_log2(n);
    for (const auto& c : vocab.constants()) {
        Element v = 0;
        for (std::uint32_t i = 0; i < width; ++i) {
            if (pos >= bits.size()) throw std::runtime_error("bit string too short");
            v = v * 2 + bits.bits[pos++];
        }
        consts[c] = v;
    }
    if (pos != bits.size()) throw std::runtime_error("trailing bits");
    return Structure(vocab, n, rels, consts);
}

std::vector<Structure> all_structures(const Vocabulary& vocab, std::size_t n) {
    std::vector<std::vector<Tuple>> spaces;
    std::size_t total_bits = 0;
    for (const auto& r : vocab.relations()) {
        spaces.push_back(tuples_lex(n, r.arity));
        total_bits += spaces.back().size();
    }
    if (total_bits > 20) throw std::runtime_error("too many structures");
    std::vector<Structure> out;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << total_bits); ++mask) {
        std::map<std::string, RelationValue> rels;
        std::size_t bit = 0;
        for (std::size_t i = 0; i < spaces.size(); ++i) {
            std::vector<Tuple> members;
            for (const auto& t : spaces[i])
                if ((mask >> bit++) & 1u) members.push_back(t);
            rels.emplace(vocab.relations()[i].name, RelationValue(vocab.relations()[i].arity, members));
        }
        std::map<std::string, Element> consts;
        for (const auto& c : vocab.constants()) consts[c] = 0;
        out.emplace_back(vocab, n, rels, consts);
    }
    return out;
}

Structure random_structure(const Vocabulary& vocab, std::size_t n, std::mt19937_64& rng) {
    std::map<std::string, RelationValue> rels;
    std::bernoulli_distribution coin(0.4);
    for (const auto& r : vocab.relations()) {
        std::vector<Tuple> members;
        for (const auto& t : tuples_lex(n, r.arity))
            if (coin(rng)) members.push_back(t);
        rels.emplace(r.name, RelationValue(r.arity, members));
    }
    std::map<std::string, Element> consts;
    std::uniform_int_distribution<Element> pick(0, static_cast<Element>(n - 1));
    for (const auto& c : vocab.constants()) consts[c] = pick(rng);
    return Structure(vocab, n, rels, consts);
}

bool brute_force_sat(const Cnf& f) {
    int vars = 0;
    for (const auto& c : f)
        for (int l : c) vars = std::max(vars, std::abs(l));
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << vars); ++a) {
        bool all = true;
        for (const auto& c : f) {
            bool sat = false;
            for (int l : c) {
                bool v = (a >> (std::abs(l) - 1)) & 1u;
                if ((l > 0) == v) sat = true;
            }
            if (!sat) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

int max_clique(const std::vector<std::vector<bool>>& adj) {
    std::size_t n = adj.size();
    int best = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i)
            for (std::size_t j = i + 1; j < n && ok; ++j)
                if ((mask >> i & 1u) && (mask >> j & 1u) && !adj[i][j]) ok = false;
        if (ok) best = std::max(best, __builtin_popcountll(mask));
    }
    return best;
}

bool dnf_satisfiable(const std::string& word) {
    std::size_t i = 0;
    auto fail = [&] { throw std::runtime_error("malformed DNF word: " + word); };
    bool any = false;
    while (i < word.size()) {
        if (word[i] != '(') fail();
        ++i;
        std::map<std::string, int> seen; // bit 1 positive, bit 2 negative
        for (;;) {
            bool neg = false;
            if (word[i] == '!') {
                neg = true;
                ++i;
            }
            if (word[i] != 'X') fail();
            ++i;
            std::string idx;
            while (i < word.size() && (word[i] == '0' || word[i] == '1')) idx += word[i++];
            if (idx.empty()) fail();
            seen[idx] |= neg ? 2 : 1;
            if (word[i] == '&') {
                ++i;
                continue;
            }
            if (word[i] != ')') fail();
            ++i;
            break;
        }
        bool clash = false;
        for (const auto& [k, v] : seen)
            if (v == 3) clash = true;
        if (!clash) any = true;
        if (i < word.size()) {
            if (word[i] != '|') fail();
            ++i;
        }
    }
    return any;
}

std::string random_dnf_word(std::mt19937_64& rng, int max_clauses, int max_literals, int index_bits) {
    std::uniform_int_distribution<int> clauses(1, max_clauses), lits(1, max_literals), bits(1, index_bits);
    std::bernoulli_distribution coin(0.5);
    int vars = 1 << index_bits;
    std::uniform_int_distribution<int> var(0, vars - 1);
    std::string w;
    int c = clauses(rng);
    for (int i = 0; i < c; ++i) {
        if (i) w += '|';
        w += '(';
        int l = lits(rng);
        for (int j = 0; j < l; ++j) {
            if (j) w += '&';
            if (coin(rng)) w += '!';
            w += 'X';
            int len = bits(rng);
            int v = var(rng) & ((1 << len) - 1);
            for (int b = len - 1; b >= 0; --b) w += ((v >> b) & 1) ? '1' : '0';
        }
        w += ')';
    }
    return w;
}

// ---------------------------------------------------------------------------
// Random sentences

namespace {

struct Gen {
    std::mt19937_64& rng;
    WffShape shape;
    std::vector<std::string> fo;
    std::vector<SOVar> so;
    int counter = 0;

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
    bool chance(double p) { return std::bernoulli_distribution(p)(rng); }

    Term term() {
        if (!fo.empty() && chance(0.75)) return Term::var(fo[static_cast<std::size_t>(pick(static_cast<int>(fo.size())))]);
        static const char* consts[] = {"ZERO", "ONE", "MAX", "LOGN", "LOGN_MINUS_1"};
        return Term::constant(consts[pick(5)]);
    }

    Formula atom() {
        bool neg = chance(0.4);
        int kind = pick(so.empty() ? 3 : 5);
        if (kind == 0) return Formula::rel_atom("P", {term()}, neg);
        if (kind == 1) return Formula::equal(term(), term(), neg);
        if (kind == 2) {
            static const char* rels[] = {"LEQ", "SUCC", "BIT"};
            return Formula::rel_atom(rels[pick(3)], {term(), term()}, neg);
        }
        const SOVar& X = so[static_cast<std::size_t>(pick(static_cast<int>(so.size())))];
        std::vector<Term> ts;
        for (int i = 0; i < X.arity; ++i) ts.push_back(term());
        return Formula::so_atom(X, ts, neg);
    }

    Formula gen(int depth, int size) {
        if (size <= 1) return atom();
        int choice = pick(depth > 0 ? 8 : 3);
        switch (choice) {
        case 0:
            return atom();
        case 1:
        case 2: {
            std::vector<Formula> parts{gen(depth, size / 2), gen(depth, size / 2)};
            return choice == 1 ? Formula::and_node(parts) : Formula::or_node(parts);
        }
        case 3:
        case 4: {
            std::string x = "x" + std::to_string(counter++);
            if (choice == 3 || so.empty()) {
                fo.push_back(x);
                Formula body = gen(depth - 1, size - 1);
                fo.pop_back();
                return Formula::exists(x, body);
            }
            SOVar G = so[static_cast<std::size_t>(pick(static_cast<int>(so.size())))];
            std::vector<std::string> vars{x};
            for (int i = 1; i < G.arity; ++i) vars.push_back(x + "_" + std::to_string(i));
            fo.insert(fo.end(), vars.begin(), vars.end());
            Formula body = gen(depth - 1, size - 1);
            fo.resize(fo.size() - vars.size());
            return Formula::forall_in(vars, G, body);
        }
        default: {
            SOVar X;
            X.name = "Y" + std::to_string(counter++);
            X.arity = shape.binary_so && chance(0.3) ? 2 : 1;
            X.exponent = X.arity == 2 ? 0 : pick(shape.max_exponent + 1);
            so.push_back(X);
            Formula body = gen(depth - 1, size - 1);
            so.pop_back();
            return chance(0.5) ? Formula::exists_so(X, body) : Formula::forall_so(X, body);
        }
        }
    }
};

} // namespace

Formula random_sentence(std::mt19937_64& rng, const WffShape& shape) {
    Gen g{rng, shape, {}, {}, 0};
    return g.gen(shape.max_depth, 12);
}

} // namespace oracle

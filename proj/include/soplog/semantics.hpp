#pragma once

#include "soplog/ast.hpp"
#include "soplog/structure.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace soplog {

struct Valuation {
    std::map<std::string, Element> fo;
    std::map<std::string, RelationValue> so;
};

struct EvalBudget {
    std::uint64_t max_candidates_per_quantifier = 1'000'000;
    std::uint64_t max_total_nodes = 100'000'000;
};

// How SO quantifier blocks are decided.
//  Enumerate: every candidate relation is tried (budget-limited).
//  Auto: small blocks are enumerated; a block with no opposite SO quantifier
//        depending on it is grounded to CNF and handed to the SAT solver.
//  PreferSat: ground whenever the block allows it.
enum class Strategy { Auto, Enumerate, PreferSat };

struct EvalOptions {
    EvalBudget budget;
    Strategy strategy = Strategy::Auto;
};

struct EvalStats {
    std::uint64_t nodes = 0;
    std::uint64_t sat_calls = 0;
    std::uint64_t sat_variables = 0;
    std::uint64_t sat_clauses = 0;
    std::uint64_t enumerated_candidates = 0;
};

// Effective size bound of an SO variable of arity r and exponent k:
// min(ceil(log n)^k, n^r).
std::uint64_t so_bound(std::size_t n, int arity, int exponent);
// Number of relations within the bound (saturating).
std::uint64_t so_value_count(std::size_t n, int arity, int exponent);

// Every relation of the given arity within the bound, by cardinality and
// then lexicographically on the sorted tuple list.
class SOValueEnumerator {
public:
    SOValueEnumerator(std::size_t n, int arity, int exponent);
    bool next(RelationValue& out);

private:
    std::size_t n_;
    int arity_;
    std::uint64_t universe_;
    std::uint64_t bound_;
    std::vector<std::uint64_t> pick_;
    bool started_ = false;
    bool done_ = false;
};

std::vector<RelationValue> enumerate_so_values(const Structure& s, int arity, int exponent);

bool evaluate(const Structure& s, const Formula& f, const Valuation& v = {}, const EvalOptions& opts = {},
              EvalStats* stats = nullptr);

struct WitnessEntry {
    std::string name;
    std::vector<Tuple> tuples;
};
using Witness = std::vector<WitnessEntry>;

// `witness X { (0,1) (2,2) }` blocks, in quantifier order.
Witness parse_witness(std::string_view text);
std::string format_witness(const Witness& w);

// Binds the leading existential SO block to w in order, then evaluates.
bool evaluate_with_witness(const Structure& s, const Formula& f, const Witness& w, const Valuation& v = {},
                           const EvalOptions& opts = {}, EvalStats* stats = nullptr);

// Naive recursive evaluator, kept separate from evaluate() as an oracle.
bool reference_evaluate(const Structure& s, const Formula& f, const Valuation& v = {});

} // namespace soplog

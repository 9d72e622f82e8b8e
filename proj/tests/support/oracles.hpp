#pragma once

#include "soplog/ast.hpp"
#include "soplog/structure.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

// Brute-force oracles and generators used only by tests. None of this calls
// into the evaluator or the formula library.
namespace oracle {

using soplog::Structure;
using soplog::Vocabulary;

// Inverse of soplog::encode for a known vocabulary and domain size.
Structure decode_structure(const Vocabulary& vocab, std::size_t n, const soplog::BitString& bits);

std::uint64_t binomial_sum(std::uint64_t universe, std::uint64_t bound);
std::uint32_t ceil_log2(std::uint64_t n);

// Every structure over `vocab` with domain size n (relations only).
std::vector<Structure> all_structures(const Vocabulary& vocab, std::size_t n);
Structure random_structure(const Vocabulary& vocab, std::size_t n, std::mt19937_64& rng);

// Clauses of signed variable ids (DIMACS style, ids >= 1).
using Cnf = std::vector<std::vector<int>>;
bool brute_force_sat(const Cnf& f);

// Largest clique of an undirected loop-free graph given as adjacency matrix.
int max_clique(const std::vector<std::vector<bool>>& adj);

// DNF word over ( ) & | ! 0 1 X; satisfiable iff some clause has no
// complementary literal pair. Literals are X followed by a nonempty bit string.
bool dnf_satisfiable(const std::string& word);
std::string random_dnf_word(std::mt19937_64& rng, int max_clauses, int max_literals, int index_bits);

// Random closed wffs over a vocabulary with a single unary relation P.
struct WffShape {
    int max_depth = 3;        // quantifier depth
    int max_exponent = 1;
    bool binary_so = true;    // allow arity-2 SO variables (exponent 0)
};
soplog::Formula random_sentence(std::mt19937_64& rng, const WffShape& shape);

} // namespace oracle

#pragma once

#include "soplog/ast.hpp"
#include "soplog/structure.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace soplog::stdlib {

// A binary number held by an SO variable, possibly as the slice selected by
// fixed leading terms: the number is {(b̄, c) | (prefix, b̄, c) ∈ var}.
struct NumRef {
    SOVar var;
    std::vector<Term> prefix;

    NumRef() = default;
    NumRef(SOVar v, std::vector<Term> p = {}) : var(std::move(v)), prefix(std::move(p)) {}

    int width() const { return var.arity - static_cast<int>(prefix.size()) - 1; }
    // var(prefix, pos, bit)
    Formula at(const std::vector<Term>& pos, const Term& bit, bool negated = false) const;
};

// Tuple-level built-ins of the arithmetic library.
Formula leq_k(int k, const std::vector<Term>& x, const std::vector<Term>& y);
Formula succ_k(int k, const std::vector<Term>& x, const std::vector<Term>& y);
Formula is_zero_tuple(const std::vector<Term>& x);
Formula is_last_tuple(const std::vector<Term>& x);
Formula tuple_eq(const std::vector<Term>& x, const std::vector<Term>& y);

Formula def_k(int k, const SOVar& I, NameSupply& names);

Formula bin_k(int k, const SOVar& X, NameSupply& names);
Formula bin_with(int k, const NumRef& X, const SOVar& I, NameSupply& names);

Formula eq_num(int k, const SOVar& X, const SOVar& Y, NameSupply& names);
Formula lt_num(int k, const SOVar& X, const SOVar& Y, NameSupply& names);
Formula le_num(int k, const SOVar& X, const SOVar& Y, NameSupply& names);
Formula eq_open(int k, const NumRef& X, const NumRef& Y, const SOVar& I, NameSupply& names);
Formula lt_open(int k, const NumRef& X, const NumRef& Y, const SOVar& I, NameSupply& names);
Formula le_open(int k, const NumRef& X, const NumRef& Y, const SOVar& I, NameSupply& names);

Formula bnum_k(int k, const SOVar& X, const Term& x, NameSupply& names);
Formula bnum_open(int k, const NumRef& X, const Term& x, const SOVar& I, NameSupply& names);

// Which conjuncts of an open arithmetic body to emit. The full open body is
// what deleting the SO quantifiers of the closed macro leaves behind.
struct BodyParts {
    bool def = true;          // DEF_k(I)
    bool def_wide = true;     // DEF_2k(I') in BMULT
    bool operand_bin = true;  // BIN conditions on the operands
    bool internal_bin = true; // BIN conditions on the internal relations
};

Formula bsum_k(int k, const SOVar& X, const SOVar& Y, const SOVar& Z, NameSupply& names);
Formula bsum_open(int k, const NumRef& X, const NumRef& Y, const NumRef& Z, const SOVar& I, const NumRef& W,
                  NameSupply& names, BodyParts parts = {});

struct MultInternals {
    SOVar I;   // k^k
    SOVar I2;  // 2k^2k
    NumRef R;  // width 2k, sliced further by the multiplier position
    NumRef S;
    NumRef W;
};

Formula bmult_k(int k, const SOVar& X, const SOVar& Y, const SOVar& Z, NameSupply& names);
Formula bmult_open(int k, const NumRef& X, const NumRef& Y, const NumRef& Z, const MultInternals& in,
                   NameSupply& names, BodyParts parts = {});
Formula shift(int k, const NumRef& S, const NumRef& X, const SOVar& I, NameSupply& names);

struct DivInternals {
    MultInternals mult;
    NumRef A;   // Y·Z
    NumRef W2;  // carries of A + M = X
};

Formula bdiv_k(int k, const SOVar& X, const SOVar& Y, const SOVar& Z, const SOVar& M, NameSupply& names);
Formula bdiv_open(int k, const NumRef& X, const NumRef& Y, const NumRef& Z, const NumRef& M, const DivInternals& in,
                  NameSupply& names, BodyParts parts = {});

Formula card_leq(const SOVar& X, const SOVar& Y, NameSupply& names);
Formula card_eq(const SOVar& X, const SOVar& Y, NameSupply& names);

Formula clique_sentence(int k);

// DNF word models: unary letter predicates over positions.
extern const char* const kWordPredicates[8]; // I_lpar I_rpar I_and I_or I_neg I_0 I_1 I_X
Vocabulary word_vocabulary();
// Letters: ( ) & | ! 0 1 X
Structure word_structure(std::string_view word);
Formula nodnfsat_sentence();
Formula dnfsat_sentence();

// Expands `@NAME{k}(args)`; SO arguments arrive resolved, term arguments as terms.
struct MacroArg {
    bool is_so = false;
    SOVar so;
    Term term;
};
Formula expand_macro(const std::string& name, int k, const std::vector<MacroArg>& args, NameSupply& names);
// Argument kinds per macro: 'S' SO variable, 'T' term, 'K' k terms.
std::optional<std::string> macro_signature(const std::string& name);
bool macro_takes_k(const std::string& name);

// ---------------------------------------------------------------------------
// Codec: a number as the relation whose i-th tuple of B^k carries bit i.

struct Codec {
    std::size_t n;
    int k;

    std::uint32_t logn() const;
    std::uint64_t positions() const;   // |B^k|
    std::uint64_t max_value() const;    // 2^|B^k| - 1 (needs |B^k| <= 63)
    Tuple position(std::uint64_t i) const; // i-th tuple of B^k, leftmost most significant

    RelationValue encode(std::uint64_t v) const;
    // Slice encoding: prefix ++ position ++ bit.
    std::vector<Tuple> encode_tuples(std::uint64_t v, const Tuple& prefix = {}) const;
    std::optional<std::uint64_t> decode(const RelationValue& r) const;
    RelationValue index_set() const; // B^k
};

// Witness values for the internal relations of the arithmetic macros.
std::vector<Tuple> sum_carries(const Codec& c, std::uint64_t x, std::uint64_t y, const Tuple& prefix = {});

struct MultWitness {
    std::vector<Tuple> R, S, W; // arity 2k+1 each (plus prefix)
};
MultWitness mult_witness(const Codec& c, std::uint64_t x, std::uint64_t y, const Tuple& prefix = {});

} // namespace soplog::stdlib

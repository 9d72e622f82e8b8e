#pragma once

#include "soplog/ast.hpp"

namespace soplog {

// Bookkeeping of one toQNF run.
struct QnfReport {
    int exists_swaps = 0;  // ∃x moved below a universal SO block
    int forall_swaps = 0;  // ∀x̄∈G moved below an existential SO block
    int merge_penalty = 0; // blocks added when sibling prefixes were interleaved
    int blocks_before = 0; // most SO blocks along any root-to-leaf path of the input
    int blocks_after = 0;
    int renamed = 0;       // bound SO variables renamed apart

    int swaps() const { return exists_swaps + forall_swaps; }
};

// Quantifier-prefix normal form of a closed wff: all SO quantifiers lead,
// followed by a matrix without SO quantifiers. Fresh names use the `_q` prefix.
// Throws FormulaError on free variables.
Formula to_qnf(const Formula& f, QnfReport* report = nullptr);

PrefixClass classify(const Formula& f);

// Most alternating SO blocks met on a root-to-leaf path.
int so_block_depth(const Formula& f);

} // namespace soplog

#pragma once

#include "soplog/ast.hpp"
#include "soplog/machine.hpp"
#include "soplog/semantics.hpp"
#include "soplog/structure.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace soplog::fagin {

struct CompileOptions {
    int k = 3;          // time and work-tape positions are k-tuples
    int k_addr = 2;     // address positions are k_addr-tuples
    bool universal = false; // quantify the roster universally (no witness checking)
};

struct RosterEntry {
    SOVar var;
    std::string role;
};

struct CompilationPlan {
    int k = 0;
    int k_addr = 0;
    bool universal = false;
    int split_depth = 0;            // extra steps per choice added by binarize()
    std::string symbols;            // work symbols in T-index order
    std::vector<RosterEntry> roster; // quantifier order
};

struct CompiledMachine {
    Formula sentence;
    CompilationPlan plan;
    MachineDesc machine; // binarized machine the sentence describes
    Vocabulary vocab;
};

// Throws CompileError for universal states (unless opts.universal), address
// writes other than 0/1, empty vocabularies or name clashes with the vocabulary.
CompiledMachine compile_machine(const MachineDesc& m, const Vocabulary& vocab, const CompileOptions& opts = {});

// `key = value` lines followed by one `var` line per roster entry.
std::string format_metadata(const CompiledMachine& c);

// Checks the size conditions of the plan at domain size n; throws CompileError.
void check_parameters(const CompiledMachine& c, std::size_t n);
// Steps the sentence can describe at domain size n: ⌈log n⌉^k - 1.
std::uint64_t step_budget(const CompiledMachine& c, std::size_t n);

// A computation path: configs[i+1] is successor number choices[i] of configs[i].
struct MachinePath {
    std::vector<MachineConfig> configs;
    std::vector<int> choices;
};

// Every maximal path of at most max_steps steps, in exploration order.
// Throws MachineError when more than `limit` paths exist.
std::vector<MachinePath> enumerate_paths(const MachineDesc& m, const BitString& input, std::uint64_t max_steps,
                                         std::size_t limit = 100000);

// Relation values of the roster for one path, padded by repeating its last
// configuration. Works for rejecting paths too.
Witness witness_from_path(const CompiledMachine& c, const Structure& a, const MachinePath& path);

// Witness from the first accepting path within the step budget, or none.
std::optional<Witness> extract_witness(const CompiledMachine& c, const Structure& a);

struct SoundnessReport {
    Outcome machine = Outcome::Reject;
    bool witness_found = false;
    bool witness_checks = false;
    std::size_t paths_checked = 0;   // refutation candidates evaluated
    std::size_t paths_satisfying = 0; // candidates whose witness satisfied the sentence
    bool accepting_path = false;     // some enumerated path accepts

    bool machine_accepts() const { return machine == Outcome::Accept; }
    bool refuted() const { return !accepting_path && paths_satisfying == 0; }
    bool agrees() const;
};

SoundnessReport check_soundness(const CompiledMachine& c, const Structure& a, const EvalOptions& opts = {});
std::string format_report(const SoundnessReport& r);

} // namespace soplog::fagin

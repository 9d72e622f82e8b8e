#pragma once

#include "soplog/error.hpp"
#include "soplog/structure.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace soplog {

enum class Mode { Existential, Universal, Deterministic };
enum class Move { Left, Right, Stay };

// Reserved symbols: '_' blank, '<' input endmark, '$' address-tape boundary,
// '*' wildcard in keys and "keep" in writes.
inline constexpr char kBlank = '_';
inline constexpr char kEndmark = '<';
inline constexpr char kBoundary = '$';
inline constexpr char kAny = '*';

struct Action {
    int next = 0;
    char addr_write = kAny;
    Move addr_move = Move::Stay;
    std::vector<char> work_write;
    std::vector<Move> work_move;
};

struct TransitionLine {
    int state = 0;
    char input = kAny;      // '0', '1', '<' or '*'
    char addr = kAny;       // '0', '1', '$' or '*'
    std::vector<char> work; // tape symbols or '*'
    Action action;

    int wildcards() const;
};

// Among the lines of a state matching the current symbols, those with the
// fewest wildcards apply; their actions are the successors.
struct MachineDesc {
    std::vector<std::string> states;
    std::vector<Mode> modes;
    int initial = 0;
    std::vector<bool> accepting;
    int tapes = 0;
    std::string alphabet = "01_";
    std::vector<TransitionLine> lines;

    int state_index(std::string_view name) const; // -1 when absent
    int add_state(const std::string& name, Mode mode = Mode::Deterministic, bool accept = false);
    bool is_final(int state) const;
    void check() const; // throws MachineError
};

MachineDesc parse_machine(std::string_view text);
std::string format_machine(const MachineDesc& m);

// Address tape length for an input of n bits: enough cells to address the
// endmark cell n.
std::uint32_t address_length(std::size_t n);

struct RunConfig {
    std::uint64_t step_c = 1;
    int step_k = 1;
    std::optional<std::uint64_t> step_budget; // overrides c·⌈log n⌉^k
    int max_alternations = -1;                 // negative: unlimited
    std::uint64_t max_total_steps = 2'000'000'000;
    int trace_level = 0;                       // 1: record the accepting path

    std::uint64_t budget_for(std::size_t n) const;
};

enum class Outcome { Accept, Reject, BudgetExceeded };
std::string to_string(Outcome o);

struct MachineConfig {
    int state = 0;
    std::string addr;
    std::uint32_t addr_head = 0;
    std::vector<std::string> work;
    std::vector<std::uint32_t> heads;
    char input = kEndmark; // symbol read in this configuration
};

struct RunResult {
    Outcome outcome = Outcome::Reject;
    std::uint64_t steps_used = 0;        // deepest branch explored
    int alternations_used = 0;           // most ∃/∀ blocks on an explored path
    std::uint64_t branches_explored = 0; // leaves reached
    std::uint64_t total_steps = 0;
    std::string budget_reason;
    // Accepting path of a machine without universal states (trace_level >= 1):
    // configurations at times 0..T and the successor index taken at each step.
    std::vector<MachineConfig> trace;
    std::vector<int> choices;

    bool accepted() const { return outcome == Outcome::Accept; }
};

RunResult run(const MachineDesc& m, const BitString& input, const RunConfig& rc);

// Single-step interface, for path enumeration outside run().
char read_input(const BitString& input, const std::string& addr);
// Actions of the most specific lines matching the given symbols. A '*' in the
// query matches only lines that do not key that position.
std::vector<const Action*> applicable_actions(const MachineDesc& m, int state, char input, char addr,
                                              const std::vector<char>& work);
MachineConfig initial_config(const MachineDesc& m, const BitString& input);
// Successors in the order run() explores them; empty for final states.
std::vector<MachineConfig> successors(const MachineDesc& m, const BitString& input, const MachineConfig& c);

// Existential and universal modes swapped, accepting and rejecting final
// states swapped.
MachineDesc dual(const MachineDesc& m);

// Splits every choice among more than two successors into a balanced binary
// tree of fresh states. `extra_depth` receives the most no-op steps added to
// a single choice.
MachineDesc binarize(const MachineDesc& m, int* extra_depth = nullptr);

// Small machines used by tests and the Fagin compiler.
MachineDesc bit0_reader();          // accepts iff input bit 0 is 1
MachineDesc exists_one_guesser();   // guesses every address bit, accepts on a 1
MachineDesc alternating_blocks(int m); // m alternating guess blocks starting existential

// CNF instances: variables are numbered from 1, literals are signed ids.
using CnfFormula = std::vector<std::vector<int>>;

// Symbols: '0' 000, '1' 001, '#' 010, '+' 011, '-' 100.
std::string cnf_symbols(const CnfFormula& f, std::uint32_t* index_width = nullptr);
BitString encode_cnf(const CnfFormula& f, int k);
CnfFormula decode_cnf(const BitString& bits);
std::string symbol_code(char symbol);

MachineDesc polylog_cnf_sat_machine(int k);

} // namespace soplog

#pragma once

#include <cstdint>
#include <vector>

namespace soplog::detail {

// CDCL solver: two watched literals, first-UIP learning, VSIDS, phase saving,
// Luby restarts. Literals use DIMACS convention: +v / -v for v >= 1.
class SatSolver {
public:
    int new_var();
    int num_vars() const { return static_cast<int>(assigns_.size()); }
    std::size_t num_clauses() const { return num_original_; }

    void add_clause(const std::vector<int>& lits);
    bool solve();
    bool model_value(int var) const { return model_[var - 1] == 1; }

private:
    struct Clause {
        std::vector<std::uint32_t> lits;
        bool learnt = false;
        bool deleted = false;
        double activity = 0;
    };
    struct Watcher {
        std::uint32_t cref;
        std::uint32_t blocker;
    };

    static std::uint32_t to_lit(int d) { return d > 0 ? 2u * (d - 1) : 2u * (-d - 1) + 1; }
    static std::uint32_t var_of(std::uint32_t l) { return l >> 1; }
    int lit_value(std::uint32_t l) const {
        int a = assigns_[l >> 1];
        return a < 0 ? -1 : (a ^ static_cast<int>(l & 1u));
    }

    void attach(std::uint32_t cref);
    void enqueue(std::uint32_t lit, std::int64_t reason);
    std::int64_t propagate();
    void analyze(std::uint32_t conflict, std::vector<std::uint32_t>& learnt, int& backtrack);
    bool literal_redundant(std::uint32_t lit, std::uint32_t abstract_levels);
    void backtrack(int level);
    int decision_level() const { return static_cast<int>(trail_lim_.size()); }
    std::int64_t pick_branch();
    void bump_var(std::uint32_t v);
    void bump_clause(Clause& c);
    void reduce_db();

    void heap_insert(std::uint32_t v);
    void heap_up(std::size_t i);
    void heap_down(std::size_t i);
    std::uint32_t heap_pop();
    bool heap_less(std::uint32_t a, std::uint32_t b) const { return activity_[a] > activity_[b]; }

    std::vector<Clause> clauses_;
    std::vector<std::vector<Watcher>> watches_;
    std::vector<std::int8_t> assigns_;
    std::vector<std::int8_t> polarity_;
    std::vector<int> level_;
    std::vector<std::int64_t> reason_;
    std::vector<std::uint32_t> trail_;
    std::vector<std::size_t> trail_lim_;
    std::size_t qhead_ = 0;
    std::vector<double> activity_;
    double var_inc_ = 1.0;
    double clause_inc_ = 1.0;
    std::vector<std::uint32_t> heap_;
    std::vector<std::int64_t> heap_index_;
    std::vector<std::uint8_t> seen_;
    std::vector<std::uint32_t> analyze_stack_;
    std::vector<std::uint32_t> analyze_clear_;
    std::vector<std::int8_t> model_;
    std::vector<std::uint32_t> pending_units_;
    std::size_t num_original_ = 0;
    std::size_t num_learnt_ = 0;
    bool unsat_ = false;
};

} // namespace soplog::detail

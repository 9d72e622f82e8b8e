#include "sat.hpp"

#include <algorithm>

namespace soplog::detail {

namespace {

double luby(double y, int x) {
    int size = 1, seq = 0;
    while (size < x + 1) {
        ++seq;
        size = 2 * size + 1;
    }
    while (size - 1 != x) {
        size = (size - 1) >> 1;
        --seq;
        x = x % size;
    }
    double r = 1;
    for (int i = 0; i < seq; ++i) r *= y;
    return r;
}

constexpr std::int64_t kNoReason = -1;

} // namespace

int SatSolver::new_var() {
    std::uint32_t v = static_cast<std::uint32_t>(assigns_.size());
    assigns_.push_back(-1);
    polarity_.push_back(1);
    level_.push_back(0);
    reason_.push_back(kNoReason);
    activity_.push_back(0);
    seen_.push_back(0);
    heap_index_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return static_cast<int>(v) + 1;
}

void SatSolver::add_clause(const std::vector<int>& in) {
    if (unsat_) return;
    std::vector<std::uint32_t> lits;
    lits.reserve(in.size());
    for (int d : in) lits.push_back(to_lit(d));
    std::sort(lits.begin(), lits.end());
    lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
    for (std::size_t i = 1; i < lits.size(); ++i)
        if (lits[i] == (lits[i - 1] ^ 1u)) return;
    ++num_original_;
    if (lits.empty()) {
        unsat_ = true;
        return;
    }
    if (lits.size() == 1) {
        pending_units_.push_back(lits[0]);
        return;
    }
    clauses_.push_back(Clause{std::move(lits)});
    attach(static_cast<std::uint32_t>(clauses_.size() - 1));
}

void SatSolver::attach(std::uint32_t cref) {
    const auto& c = clauses_[cref].lits;
    watches_[c[0] ^ 1u].push_back({cref, c[1]});
    watches_[c[1] ^ 1u].push_back({cref, c[0]});
}

void SatSolver::enqueue(std::uint32_t lit, std::int64_t reason) {
    std::uint32_t v = var_of(lit);
    assigns_[v] = static_cast<std::int8_t>((lit & 1u) ^ 1u);
    level_[v] = decision_level();
    reason_[v] = reason;
    trail_.push_back(lit);
}

std::int64_t SatSolver::propagate() {
    while (qhead_ < trail_.size()) {
        std::uint32_t p = trail_[qhead_++];
        auto& ws = watches_[p];
        std::size_t i = 0, j = 0;
        while (i < ws.size()) {
            Watcher w = ws[i];
            if (lit_value(w.blocker) == 1) {
                ws[j++] = ws[i++];
                continue;
            }
            Clause& c = clauses_[w.cref];
            if (c.deleted) {
                ++i;
                continue;
            }
            auto& lits = c.lits;
            std::uint32_t false_lit = p ^ 1u;
            if (lits[0] == false_lit) std::swap(lits[0], lits[1]);
            ++i;
            std::uint32_t first = lits[0];
            if (first != w.blocker && lit_value(first) == 1) {
                ws[j++] = {w.cref, first};
                continue;
            }
            bool moved = false;
            for (std::size_t k = 2; k < lits.size(); ++k) {
                if (lit_value(lits[k]) != 0) {
                    std::swap(lits[1], lits[k]);
                    watches_[lits[1] ^ 1u].push_back({w.cref, first});
                    moved = true;
                    break;
                }
            }
            if (moved) continue;
            ws[j++] = {w.cref, first};
            if (lit_value(first) == 0) {
                while (i < ws.size()) ws[j++] = ws[i++];
                ws.resize(j);
                qhead_ = trail_.size();
                return w.cref;
            }
            enqueue(first, w.cref);
        }
        ws.resize(j);
    }
    return kNoReason;
}

void SatSolver::bump_var(std::uint32_t v) {
    if ((activity_[v] += var_inc_) > 1e100) {
        for (auto& a : activity_) a *= 1e-100;
        var_inc_ *= 1e-100;
    }
    if (heap_index_[v] >= 0) heap_up(static_cast<std::size_t>(heap_index_[v]));
}

void SatSolver::bump_clause(Clause& c) {
    if ((c.activity += clause_inc_) > 1e20) {
        for (auto& cl : clauses_)
            if (cl.learnt) cl.activity *= 1e-20;
        clause_inc_ *= 1e-20;
    }
}

bool SatSolver::literal_redundant(std::uint32_t lit, std::uint32_t abstract_levels) {
    analyze_stack_.clear();
    analyze_stack_.push_back(lit);
    std::size_t top = analyze_clear_.size();
    while (!analyze_stack_.empty()) {
        std::uint32_t q = analyze_stack_.back();
        analyze_stack_.pop_back();
        const auto& c = clauses_[static_cast<std::size_t>(reason_[var_of(q)])].lits;
        for (std::size_t i = 1; i < c.size(); ++i) {
            std::uint32_t v = var_of(c[i]);
            if (seen_[v] || level_[v] == 0) continue;
            if (reason_[v] != kNoReason && ((1u << (level_[v] & 31)) & abstract_levels)) {
                seen_[v] = 1;
                analyze_stack_.push_back(c[i]);
                analyze_clear_.push_back(c[i]);
            } else {
                for (std::size_t k = top; k < analyze_clear_.size(); ++k) seen_[var_of(analyze_clear_[k])] = 0;
                analyze_clear_.resize(top);
                return false;
            }
        }
    }
    return true;
}

void SatSolver::analyze(std::uint32_t conflict, std::vector<std::uint32_t>& learnt, int& bt) {
    learnt.clear();
    learnt.push_back(0);
    int path = 0;
    std::int64_t cref = conflict;
    std::uint32_t p = 0;
    bool have_p = false;
    std::size_t index = trail_.size();
    do {
        Clause& c = clauses_[static_cast<std::size_t>(cref)];
        if (c.learnt) bump_clause(c);
        // The reason clause has its implied literal at position 0.
        for (std::size_t i = have_p ? 1 : 0; i < c.lits.size(); ++i) {
            std::uint32_t q = c.lits[i];
            std::uint32_t v = var_of(q);
            if (seen_[v] || level_[v] == 0) continue;
            seen_[v] = 1;
            bump_var(v);
            if (level_[v] >= decision_level())
                ++path;
            else
                learnt.push_back(q);
        }
        while (!seen_[var_of(trail_[--index])]) {}
        p = trail_[index];
        have_p = true;
        cref = reason_[var_of(p)];
        seen_[var_of(p)] = 0;
        --path;
        if (path > 0 && cref != kNoReason) {
            // keep the implied literal first for the loop above
            auto& lits = clauses_[static_cast<std::size_t>(cref)].lits;
            if (lits[0] != p) {
                auto it = std::find(lits.begin(), lits.end(), p);
                std::swap(*it, lits[0]);
            }
        }
    } while (path > 0);
    learnt[0] = p ^ 1u;

    analyze_clear_.assign(learnt.begin(), learnt.end());
    std::uint32_t abstract_levels = 0;
    for (std::size_t i = 1; i < learnt.size(); ++i) abstract_levels |= 1u << (level_[var_of(learnt[i])] & 31);
    std::size_t j = 1;
    for (std::size_t i = 1; i < learnt.size(); ++i) {
        std::uint32_t v = var_of(learnt[i]);
        if (reason_[v] == kNoReason || !literal_redundant(learnt[i], abstract_levels)) learnt[j++] = learnt[i];
    }
    learnt.resize(j);
    for (std::uint32_t l : analyze_clear_) seen_[var_of(l)] = 0;
    analyze_clear_.clear();

    if (learnt.size() == 1) {
        bt = 0;
    } else {
        std::size_t max_i = 1;
        for (std::size_t i = 2; i < learnt.size(); ++i)
            if (level_[var_of(learnt[i])] > level_[var_of(learnt[max_i])]) max_i = i;
        std::swap(learnt[1], learnt[max_i]);
        bt = level_[var_of(learnt[1])];
    }
}

void SatSolver::backtrack(int level) {
    if (decision_level() <= level) return;
    for (std::size_t i = trail_.size(); i > trail_lim_[static_cast<std::size_t>(level)]; --i) {
        std::uint32_t v = var_of(trail_[i - 1]);
        polarity_[v] = static_cast<std::int8_t>(trail_[i - 1] & 1u);
        assigns_[v] = -1;
        reason_[v] = kNoReason;
        if (heap_index_[v] < 0) heap_insert(v);
    }
    trail_.resize(trail_lim_[static_cast<std::size_t>(level)]);
    trail_lim_.resize(static_cast<std::size_t>(level));
    qhead_ = trail_.size();
}

std::int64_t SatSolver::pick_branch() {
    while (!heap_.empty()) {
        std::uint32_t v = heap_pop();
        if (assigns_[v] < 0) return v;
    }
    return -1;
}

void SatSolver::reduce_db() {
    std::vector<std::uint32_t> learnts;
    for (std::uint32_t i = 0; i < clauses_.size(); ++i)
        if (clauses_[i].learnt && !clauses_[i].deleted && clauses_[i].lits.size() > 2) learnts.push_back(i);
    std::sort(learnts.begin(), learnts.end(),
              [&](std::uint32_t a, std::uint32_t b) { return clauses_[a].activity < clauses_[b].activity; });
    std::size_t drop = learnts.size() / 2;
    for (std::size_t i = 0; i < drop; ++i) {
        Clause& c = clauses_[learnts[i]];
        std::uint32_t v = var_of(c.lits[0]);
        bool locked = reason_[v] == static_cast<std::int64_t>(learnts[i]) && lit_value(c.lits[0]) == 1;
        if (locked) continue;
        c.deleted = true;
        c.lits.clear();
        c.lits.shrink_to_fit();
        --num_learnt_;
    }
}

bool SatSolver::solve() {
    if (unsat_) return false;
    backtrack(0);
    for (std::uint32_t u : pending_units_) {
        int val = lit_value(u);
        if (val == 0) {
            unsat_ = true;
            return false;
        }
        if (val < 0) enqueue(u, kNoReason);
    }
    pending_units_.clear();
    if (propagate() != kNoReason) {
        unsat_ = true;
        return false;
    }

    std::vector<std::uint32_t> learnt;
    int restarts = 0;
    std::uint64_t conflicts_left = static_cast<std::uint64_t>(luby(2, restarts) * 100);
    std::size_t max_learnts = std::max<std::size_t>(clauses_.size() / 3, 5000);

    for (;;) {
        std::int64_t confl = propagate();
        if (confl != kNoReason) {
            if (decision_level() == 0) {
                unsat_ = true;
                return false;
            }
            int bt = 0;
            analyze(static_cast<std::uint32_t>(confl), learnt, bt);
            backtrack(bt);
            if (learnt.size() == 1) {
                enqueue(learnt[0], kNoReason);
            } else {
                clauses_.push_back(Clause{learnt, true});
                auto cref = static_cast<std::uint32_t>(clauses_.size() - 1);
                attach(cref);
                bump_clause(clauses_.back());
                ++num_learnt_;
                enqueue(learnt[0], cref);
            }
            var_inc_ *= 1 / 0.95;
            clause_inc_ *= 1 / 0.999;
            if (conflicts_left > 0) --conflicts_left;
            continue;
        }
        if (conflicts_left == 0) {
            backtrack(0);
            ++restarts;
            conflicts_left = static_cast<std::uint64_t>(luby(2, restarts) * 100);
            continue;
        }
        if (num_learnt_ >= max_learnts + trail_.size()) {
            reduce_db();
            max_learnts += max_learnts / 10;
        }
        std::int64_t next = pick_branch();
        if (next < 0) {
            model_.assign(assigns_.begin(), assigns_.end());
            backtrack(0);
            return true;
        }
        trail_lim_.push_back(trail_.size());
        auto v = static_cast<std::uint32_t>(next);
        enqueue(2 * v + static_cast<std::uint32_t>(polarity_[v]), kNoReason);
    }
}

// --- activity heap ---------------------------------------------------------

void SatSolver::heap_insert(std::uint32_t v) {
    heap_index_[v] = static_cast<std::int64_t>(heap_.size());
    heap_.push_back(v);
    heap_up(heap_.size() - 1);
}

void SatSolver::heap_up(std::size_t i) {
    std::uint32_t v = heap_[i];
    while (i > 0) {
        std::size_t parent = (i - 1) / 2;
        if (!heap_less(v, heap_[parent])) break;
        heap_[i] = heap_[parent];
        heap_index_[heap_[i]] = static_cast<std::int64_t>(i);
        i = parent;
    }
    heap_[i] = v;
    heap_index_[v] = static_cast<std::int64_t>(i);
}

void SatSolver::heap_down(std::size_t i) {
    std::uint32_t v = heap_[i];
    for (;;) {
        std::size_t child = 2 * i + 1;
        if (child >= heap_.size()) break;
        if (child + 1 < heap_.size() && heap_less(heap_[child + 1], heap_[child])) ++child;
        if (!heap_less(heap_[child], v)) break;
        heap_[i] = heap_[child];
        heap_index_[heap_[i]] = static_cast<std::int64_t>(i);
        i = child;
    }
    heap_[i] = v;
    heap_index_[v] = static_cast<std::int64_t>(i);
}

std::uint32_t SatSolver::heap_pop() {
    std::uint32_t top = heap_.front();
    heap_index_[top] = -1;
    heap_.front() = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
        heap_index_[heap_.front()] = 0;
        heap_down(0);
    }
    return top;
}

} // namespace soplog::detail

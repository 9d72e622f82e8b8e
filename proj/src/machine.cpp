#include "soplog/machine.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>

namespace soplog {

int TransitionLine::wildcards() const {
    int w = (input == kAny) + (addr == kAny);
    for (char c : work) w += c == kAny;
    return w;
}

int MachineDesc::state_index(std::string_view name) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == name) return static_cast<int>(i);
    return -1;
}

int MachineDesc::add_state(const std::string& name, Mode mode, bool accept) {
    if (state_index(name) >= 0) throw MachineError("duplicate state " + name);
    states.push_back(name);
    modes.push_back(mode);
    accepting.push_back(accept);
    return static_cast<int>(states.size() - 1);
}

bool MachineDesc::is_final(int state) const {
    return std::none_of(lines.begin(), lines.end(), [&](const TransitionLine& l) { return l.state == state; });
}

namespace {

bool in_alphabet(const MachineDesc& m, char c) { return m.alphabet.find(c) != std::string::npos; }

char move_char(Move mv) { return mv == Move::Left ? 'L' : mv == Move::Right ? 'R' : 'S'; }

char mode_char(Mode md) { return md == Mode::Existential ? 'E' : md == Mode::Universal ? 'U' : 'D'; }

} // namespace

void MachineDesc::check() const {
    auto fail = [](const std::string& msg) { throw MachineError(msg); };
    if (states.empty()) fail("machine has no states");
    if (modes.size() != states.size() || accepting.size() != states.size()) fail("state tables disagree in size");
    if (initial < 0 || initial >= static_cast<int>(states.size())) fail("initial state out of range");
    if (tapes < 0) fail("negative tape count");
    for (char c : {'0', '1', kBlank})
        if (!in_alphabet(*this, c)) fail(std::string("alphabet lacks '") + c + "'");
    for (char c : alphabet)
        if (c == kEndmark || c == kBoundary || c == kAny || std::isspace(static_cast<unsigned char>(c)) || c == ',' ||
            c == '(' || c == ')' || c == '/')
            fail(std::string("reserved symbol '") + c + "' in the alphabet");
    for (const auto& l : lines) {
        std::string where = "transition of state " + (l.state >= 0 && l.state < static_cast<int>(states.size()) ? states[l.state] : "?");
        if (l.state < 0 || l.state >= static_cast<int>(states.size())) fail("transition from an unknown state");
        if (l.input != '0' && l.input != '1' && l.input != kEndmark && l.input != kAny)
            fail(where + ": input symbol must be 0, 1, < or *");
        if (l.addr != '0' && l.addr != '1' && l.addr != kBoundary && l.addr != kAny)
            fail(where + ": address symbol must be 0, 1, $ or *");
        if (static_cast<int>(l.work.size()) != tapes || static_cast<int>(l.action.work_write.size()) != tapes ||
            static_cast<int>(l.action.work_move.size()) != tapes)
            fail(where + ": expected " + std::to_string(tapes) + " work tapes");
        for (char c : l.work)
            if (c != kAny && !in_alphabet(*this, c)) fail(where + ": symbol '" + c + "' is not in the alphabet");
        if (l.action.next < 0 || l.action.next >= static_cast<int>(states.size())) fail(where + ": unknown next state");
        if (l.action.addr_write != '0' && l.action.addr_write != '1' && l.action.addr_write != kAny)
            fail(where + ": address write must be 0, 1 or *");
        for (char c : l.action.work_write)
            if (c != kAny && !in_alphabet(*this, c)) fail(where + ": write '" + c + "' is not in the alphabet");
    }
}

// ---------------------------------------------------------------------------
// Text format

namespace {

struct LineParser {
    std::string_view text;
    int line;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, static_cast<int>(pos) + 1); }

    void space() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool done() {
        space();
        return pos >= text.size();
    }
    void expect(std::string_view s) {
        space();
        if (text.substr(pos, s.size()) != s) fail("expected '" + std::string(s) + "'");
        pos += s.size();
    }
    std::string word() {
        space();
        std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
                                     text[pos] == '.' || text[pos] == '-'))
            ++pos;
        if (start == pos) fail("expected a name");
        return std::string(text.substr(start, pos - start));
    }
    char symbol() {
        space();
        if (pos >= text.size()) fail("expected a symbol");
        char c = text[pos++];
        if (c == ',' || c == '(' || c == ')' || c == '/') fail(std::string("unexpected '") + c + "'");
        return c;
    }
    Move move() {
        space();
        char c = pos < text.size() ? text[pos] : '\0';
        if (c != 'L' && c != 'R' && c != 'S') fail("move must be L, R or S");
        ++pos;
        return c == 'L' ? Move::Left : c == 'R' ? Move::Right : Move::Stay;
    }
};

} // namespace

MachineDesc parse_machine(std::string_view text) {
    MachineDesc m;
    m.alphabet.clear();
    struct PendingLine {
        int line;
        std::string from, to;
        TransitionLine t;
    };
    std::vector<PendingLine> pending;
    std::vector<std::pair<std::string, int>> mode_lines, accept_lines;
    std::string initial;
    int initial_line = 0;
    bool have_tapes = false;

    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto c = raw.find("//"); c != std::string::npos) raw.erase(c);
        LineParser p{raw, lineno};
        if (p.done()) continue;
        std::string key = p.word();
        p.expect(":");
        if (key == "states") {
            while (!p.done()) {
                std::string s = p.word();
                if (m.state_index(s) >= 0) p.fail("duplicate state " + s);
                m.add_state(s);
            }
        } else if (key == "initial") {
            initial = p.word();
            initial_line = lineno;
            if (!p.done()) p.fail("one initial state expected");
        } else if (key == "accepting") {
            while (!p.done()) accept_lines.emplace_back(p.word(), lineno);
        } else if (key == "modes") {
            while (!p.done()) {
                std::string s = p.word();
                p.expect("=");
                char md = p.symbol();
                if (md != 'E' && md != 'U' && md != 'D') p.fail("mode must be E, U or D");
                mode_lines.emplace_back(s + "=" + md, lineno);
            }
        } else if (key == "tapes") {
            std::string n = p.word();
            if (!std::all_of(n.begin(), n.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
                p.fail("tape count must be a number");
            m.tapes = std::stoi(n);
            have_tapes = true;
        } else if (key == "alphabet") {
            while (!p.done()) m.alphabet += p.symbol();
        } else if (key == "trans") {
            PendingLine pl{lineno, {}, {}, {}};
            p.expect("(");
            pl.from = p.word();
            p.expect(",");
            pl.t.input = p.symbol();
            p.expect(",");
            pl.t.addr = p.symbol();
            p.space();
            while (p.pos < p.text.size() && p.text[p.pos] == ',') {
                ++p.pos;
                pl.t.work.push_back(p.symbol());
                p.space();
            }
            p.expect(")");
            p.expect("->");
            p.expect("(");
            pl.to = p.word();
            p.expect(",");
            pl.t.action.addr_write = p.symbol();
            p.expect("/");
            pl.t.action.addr_move = p.move();
            p.space();
            while (p.pos < p.text.size() && p.text[p.pos] == ',') {
                ++p.pos;
                pl.t.action.work_write.push_back(p.symbol());
                p.expect("/");
                pl.t.action.work_move.push_back(p.move());
                p.space();
            }
            p.expect(")");
            if (!p.done()) p.fail("trailing text after transition");
            pending.push_back(std::move(pl));
        } else {
            throw ParseError("unknown section '" + key + "'", lineno, 1);
        }
    }
    if (m.states.empty()) throw ParseError("missing 'states:' section", lineno, 1);
    if (!have_tapes) throw ParseError("missing 'tapes:' section", lineno, 1);
    if (initial.empty()) throw ParseError("missing 'initial:' section", lineno, 1);
    if (m.alphabet.empty()) m.alphabet = "01_";
    m.initial = m.state_index(initial);
    if (m.initial < 0) throw ParseError("unknown initial state " + initial, initial_line, 1);
    for (const auto& [s, l] : accept_lines) {
        int i = m.state_index(s);
        if (i < 0) throw ParseError("unknown accepting state " + s, l, 1);
        m.accepting[static_cast<std::size_t>(i)] = true;
    }
    for (const auto& [spec, l] : mode_lines) {
        std::string s = spec.substr(0, spec.size() - 2);
        int i = m.state_index(s);
        if (i < 0) throw ParseError("unknown state " + s + " in modes", l, 1);
        char md = spec.back();
        m.modes[static_cast<std::size_t>(i)] = md == 'E' ? Mode::Existential : md == 'U' ? Mode::Universal : Mode::Deterministic;
    }
    for (auto& pl : pending) {
        pl.t.state = m.state_index(pl.from);
        pl.t.action.next = m.state_index(pl.to);
        if (pl.t.state < 0) throw ParseError("unknown state " + pl.from, pl.line, 1);
        if (pl.t.action.next < 0) throw ParseError("unknown state " + pl.to, pl.line, 1);
        if (static_cast<int>(pl.t.work.size()) != m.tapes || static_cast<int>(pl.t.action.work_write.size()) != m.tapes)
            throw ParseError("expected " + std::to_string(m.tapes) + " work tapes", pl.line, 1);
        m.lines.push_back(std::move(pl.t));
    }
    try {
        m.check();
    } catch (const MachineError& e) {
        throw ParseError(e.what(), lineno, 1);
    }
    return m;
}

std::string format_machine(const MachineDesc& m) {
    std::ostringstream out;
    out << "states:";
    for (const auto& s : m.states) out << ' ' << s;
    out << "\ninitial: " << m.states[static_cast<std::size_t>(m.initial)] << "\naccepting:";
    for (std::size_t i = 0; i < m.states.size(); ++i)
        if (m.accepting[i]) out << ' ' << m.states[i];
    out << "\nmodes:";
    for (std::size_t i = 0; i < m.states.size(); ++i)
        if (m.modes[i] != Mode::Deterministic) out << ' ' << m.states[i] << '=' << mode_char(m.modes[i]);
    out << "\ntapes: " << m.tapes << "\nalphabet:";
    for (char c : m.alphabet) out << ' ' << c;
    out << '\n';
    for (const auto& l : m.lines) {
        out << "trans: (" << m.states[static_cast<std::size_t>(l.state)] << ", " << l.input << ", " << l.addr;
        for (char c : l.work) out << ", " << c;
        out << ") -> (" << m.states[static_cast<std::size_t>(l.action.next)] << ", " << l.action.addr_write << '/'
            << move_char(l.action.addr_move);
        for (std::size_t i = 0; i < l.action.work_write.size(); ++i)
            out << ", " << l.action.work_write[i] << '/' << move_char(l.action.work_move[i]);
        out << ")\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Simulation

std::uint32_t address_length(std::size_t n) { return std::max<std::uint32_t>(1, log_ceil(n + 1)); }

std::uint64_t RunConfig::budget_for(std::size_t n) const {
    if (step_budget) return *step_budget;
    std::uint64_t l = std::max<std::uint64_t>(1, log_ceil(n));
    std::uint64_t b = step_c;
    for (int i = 0; i < step_k; ++i) {
        if (b > (std::uint64_t{1} << 62) / l) return std::uint64_t{1} << 62;
        b *= l;
    }
    return b;
}

std::string to_string(Outcome o) {
    switch (o) {
    case Outcome::Accept:
        return "accept";
    case Outcome::Reject:
        return "reject";
    case Outcome::BudgetExceeded:
        break;
    }
    return "budget-exceeded";
}

namespace {

struct TotalStepsExceeded {};

class Simulator {
public:
    Simulator(const MachineDesc& m, const BitString& input, const RunConfig& rc)
        : m_(m), input_(input), rc_(rc), budget_(rc.budget_for(input.size())) {
        m.check();
        by_state_.resize(m.states.size());
        for (std::size_t i = 0; i < m.lines.size(); ++i) by_state_[static_cast<std::size_t>(m.lines[i].state)].push_back(i);
        reset();
    }

    RunResult run() {
        RunResult r;
        try {
            r.outcome = search();
        } catch (const TotalStepsExceeded&) {
            r.outcome = Outcome::BudgetExceeded;
            budget_reason_ = "total steps above " + std::to_string(rc_.max_total_steps);
        }
        r.steps_used = max_depth_;
        r.alternations_used = max_alt_;
        r.branches_explored = leaves_;
        r.total_steps = total_;
        r.budget_reason = r.outcome == Outcome::BudgetExceeded ? budget_reason_ : "";
        if (r.outcome == Outcome::Accept && have_path_) {
            r.choices = path_;
            reset();
            r.trace.push_back(snapshot());
            for (int c : path_) {
                auto acts = applicable();
                apply(*acts[static_cast<std::size_t>(c)]);
                r.trace.push_back(snapshot());
            }
        }
        return r;
    }

private:
    struct Undo {
        enum Kind : std::uint8_t { State, AddrHead, AddrCell, Head, Cell, Size } kind;
        std::uint32_t tape;
        std::uint32_t pos;
        std::uint32_t old;
    };

    struct Frame {
        std::vector<const Action*> acts;
        std::size_t next = 0;
        Mode mode;
        int alt;
        int last;
        std::uint64_t depth;
        std::size_t mark = 0; // undo log size before the current child
        bool accept = false, reject = false, budget = false;
    };

    void reset() {
        state_ = m_.initial;
        addr_.assign(address_length(input_.size()), '0');
        addr_head_ = 0;
        work_.assign(static_cast<std::size_t>(m_.tapes), std::string());
        heads_.assign(static_cast<std::size_t>(m_.tapes), 0);
        log_.clear();
    }

    char input_symbol() const { return read_input(input_, addr_); }
    char addr_symbol() const { return addr_head_ >= addr_.size() ? kBoundary : addr_[addr_head_]; }
    char work_symbol(std::size_t t) const { return heads_[t] < work_[t].size() ? work_[t][heads_[t]] : kBlank; }

    std::vector<const Action*> applicable() const {
        char in = input_symbol(), ad = addr_symbol();
        int best = 1 << 30;
        std::vector<const Action*> out;
        for (std::size_t li : by_state_[static_cast<std::size_t>(state_)]) {
            const auto& l = m_.lines[li];
            if (l.input != kAny && l.input != in) continue;
            if (l.addr != kAny && l.addr != ad) continue;
            bool ok = true;
            for (std::size_t t = 0; t < l.work.size() && ok; ++t)
                if (l.work[t] != kAny && l.work[t] != work_symbol(t)) ok = false;
            if (!ok) continue;
            int w = l.wildcards();
            if (w < best) {
                best = w;
                out.clear();
            }
            if (w == best) out.push_back(&l.action);
        }
        return out;
    }

    std::string describe_key() const {
        std::string s = "(" + m_.states[static_cast<std::size_t>(state_)] + ", " + input_symbol() + ", " + addr_symbol();
        for (std::size_t t = 0; t < work_.size(); ++t) s += std::string(", ") + work_symbol(t);
        return s + ")";
    }

    void apply(const Action& a) {
        log_.push_back({Undo::State, 0, 0, static_cast<std::uint32_t>(state_)});
        state_ = a.next;
        if (a.addr_write != kAny) {
            if (addr_head_ >= addr_.size())
                throw MachineError("write on the address-tape boundary cell in state " + m_.states[static_cast<std::size_t>(state_)]);
            log_.push_back({Undo::AddrCell, 0, addr_head_, static_cast<std::uint32_t>(addr_[addr_head_])});
            addr_[addr_head_] = a.addr_write;
        }
        if (a.addr_move != Move::Stay) {
            log_.push_back({Undo::AddrHead, 0, 0, addr_head_});
            if (a.addr_move == Move::Left && addr_head_ > 0) --addr_head_;
            if (a.addr_move == Move::Right && addr_head_ < addr_.size()) ++addr_head_;
        }
        for (std::size_t t = 0; t < work_.size(); ++t) {
            char w = a.work_write[t];
            if (w != kAny) {
                std::string& tape = work_[t];
                if (heads_[t] >= tape.size()) {
                    if (w != kBlank) {
                        log_.push_back({Undo::Size, static_cast<std::uint32_t>(t), 0, static_cast<std::uint32_t>(tape.size())});
                        tape.resize(heads_[t] + 1, kBlank);
                        tape[heads_[t]] = w;
                    }
                } else {
                    log_.push_back({Undo::Cell, static_cast<std::uint32_t>(t), heads_[t], static_cast<std::uint32_t>(tape[heads_[t]])});
                    tape[heads_[t]] = w;
                }
            }
            Move mv = a.work_move[t];
            if (mv == Move::Right || (mv == Move::Left && heads_[t] > 0)) {
                log_.push_back({Undo::Head, static_cast<std::uint32_t>(t), 0, heads_[t]});
                heads_[t] += mv == Move::Right ? 1 : -1;
            }
        }
    }

    void undo_to(std::size_t mark) {
        while (log_.size() > mark) {
            const Undo u = log_.back();
            log_.pop_back();
            switch (u.kind) {
            case Undo::State:
                state_ = static_cast<int>(u.old);
                break;
            case Undo::AddrHead:
                addr_head_ = u.old;
                break;
            case Undo::AddrCell:
                addr_[u.pos] = static_cast<char>(u.old);
                break;
            case Undo::Head:
                heads_[u.tape] = u.old;
                break;
            case Undo::Cell:
                work_[u.tape][u.pos] = static_cast<char>(u.old);
                break;
            case Undo::Size:
                work_[u.tape].resize(u.old);
                break;
            }
        }
    }

    MachineConfig snapshot() const {
        MachineConfig c;
        c.state = state_;
        c.addr = addr_;
        c.addr_head = addr_head_;
        c.work = work_;
        c.heads = heads_;
        c.input = input_symbol();
        return c;
    }

    // Examines the current configuration: either a leaf outcome or a new frame.
    std::optional<Outcome> enter(std::uint64_t depth, int alt, int last) {
        max_depth_ = std::max(max_depth_, depth);
        if (by_state_[static_cast<std::size_t>(state_)].empty()) {
            ++leaves_;
            return m_.accepting[static_cast<std::size_t>(state_)] ? Outcome::Accept : Outcome::Reject;
        }
        Mode mode = m_.modes[static_cast<std::size_t>(state_)];
        if (mode != Mode::Deterministic && static_cast<int>(mode) != last) {
            ++alt;
            last = static_cast<int>(mode);
        }
        max_alt_ = std::max(max_alt_, alt);
        if (rc_.max_alternations >= 0 && alt > rc_.max_alternations) {
            ++leaves_;
            budget_reason_ = "alternations above " + std::to_string(rc_.max_alternations);
            return Outcome::BudgetExceeded;
        }
        if (depth >= budget_) {
            ++leaves_;
            budget_reason_ = "steps above " + std::to_string(budget_);
            return Outcome::BudgetExceeded;
        }
        Frame f;
        f.acts = applicable();
        if (mode == Mode::Deterministic && f.acts.size() != 1)
            throw MachineError((f.acts.empty() ? "no transition for " : "several transitions for ") + describe_key() +
                               " in deterministic state " + m_.states[static_cast<std::size_t>(state_)]);
        if (f.acts.empty()) {
            ++leaves_;
            return Outcome::Reject;
        }
        f.mode = mode;
        f.alt = alt;
        f.last = last;
        f.depth = depth;
        if (mode == Mode::Universal) ++universal_frames_;
        stack_.push_back(std::move(f));
        return std::nullopt;
    }

    static void record(Frame& f, Outcome o) {
        if (o == Outcome::Accept) f.accept = true;
        if (o == Outcome::Reject) f.reject = true;
        if (o == Outcome::BudgetExceeded) f.budget = true;
    }

    static std::optional<Outcome> settled(const Frame& f) {
        bool exhausted = f.next == f.acts.size();
        switch (f.mode) {
        case Mode::Existential:
        case Mode::Deterministic:
            if (f.accept) return Outcome::Accept;
            if (exhausted) return f.budget ? Outcome::BudgetExceeded : Outcome::Reject;
            break;
        case Mode::Universal:
            if (f.reject) return Outcome::Reject;
            if (exhausted) return f.budget ? Outcome::BudgetExceeded : Outcome::Accept;
            break;
        }
        return std::nullopt;
    }

    void note_accepting_leaf() {
        if (rc_.trace_level < 1 || have_path_ || universal_frames_ > 0) return;
        path_.clear();
        for (const auto& f : stack_) path_.push_back(static_cast<int>(f.next) - 1);
        have_path_ = true;
    }

    Outcome search() {
        if (auto leaf = enter(0, 0, -1)) {
            if (*leaf == Outcome::Accept) note_accepting_leaf();
            return *leaf;
        }
        for (;;) {
            Frame& f = stack_.back();
            if (auto done = settled(f)) {
                Outcome o = *done;
                if (f.mode == Mode::Universal) --universal_frames_;
                stack_.pop_back();
                if (stack_.empty()) return o;
                Frame& parent = stack_.back();
                undo_to(parent.mark);
                record(parent, o);
                continue;
            }
            if (++total_ > rc_.max_total_steps) throw TotalStepsExceeded{};
            f.mark = log_.size();
            const Action* a = f.acts[f.next++];
            std::uint64_t depth = f.depth + 1;
            int alt = f.alt, last = f.last;
            apply(*a);
            if (auto leaf = enter(depth, alt, last)) {
                if (*leaf == Outcome::Accept) note_accepting_leaf();
                Frame& again = stack_.back();
                undo_to(again.mark);
                record(again, *leaf);
            }
        }
    }

    const MachineDesc& m_;
    const BitString& input_;
    const RunConfig& rc_;
    std::uint64_t budget_;
    std::vector<std::vector<std::size_t>> by_state_;

    int state_ = 0;
    std::string addr_;
    std::uint32_t addr_head_ = 0;
    std::vector<std::string> work_;
    std::vector<std::uint32_t> heads_;
    std::vector<Undo> log_;
    std::vector<Frame> stack_;

    std::uint64_t max_depth_ = 0, leaves_ = 0, total_ = 0;
    int max_alt_ = 0;
    int universal_frames_ = 0;
    std::string budget_reason_;
    std::vector<int> path_;
    bool have_path_ = false;
};

} // namespace

RunResult run(const MachineDesc& m, const BitString& input, const RunConfig& rc) {
    return Simulator(m, input, rc).run();
}

char read_input(const BitString& input, const std::string& addr) {
    std::uint64_t v = 0;
    for (char c : addr) {
        if (v >= (std::uint64_t{1} << 62)) return kEndmark;
        v = v * 2 + (c == '1');
    }
    return v < input.size() ? static_cast<char>('0' + input.bits[v]) : kEndmark;
}

std::vector<const Action*> applicable_actions(const MachineDesc& m, int state, char input, char addr,
                                              const std::vector<char>& work) {
    int best = 1 << 30;
    std::vector<const Action*> out;
    for (const auto& l : m.lines) {
        if (l.state != state) continue;
        if (l.input != kAny && l.input != input) continue;
        if (l.addr != kAny && l.addr != addr) continue;
        bool ok = true;
        for (std::size_t t = 0; t < l.work.size() && ok; ++t)
            if (l.work[t] != kAny && l.work[t] != work[t]) ok = false;
        if (!ok) continue;
        int w = l.wildcards();
        if (w < best) {
            best = w;
            out.clear();
        }
        if (w == best) out.push_back(&l.action);
    }
    return out;
}

MachineConfig initial_config(const MachineDesc& m, const BitString& input) {
    MachineConfig c;
    c.state = m.initial;
    c.addr.assign(address_length(input.size()), '0');
    c.work.assign(static_cast<std::size_t>(m.tapes), std::string());
    c.heads.assign(static_cast<std::size_t>(m.tapes), 0);
    c.input = read_input(input, c.addr);
    return c;
}

std::vector<MachineConfig> successors(const MachineDesc& m, const BitString& input, const MachineConfig& c) {
    std::vector<char> work;
    for (std::size_t t = 0; t < c.work.size(); ++t) work.push_back(c.heads[t] < c.work[t].size() ? c.work[t][c.heads[t]] : kBlank);
    char addr = c.addr_head < c.addr.size() ? c.addr[c.addr_head] : kBoundary;
    std::vector<MachineConfig> out;
    for (const Action* a : applicable_actions(m, c.state, c.input, addr, work)) {
        MachineConfig d = c;
        d.state = a->next;
        if (a->addr_write != kAny) {
            if (d.addr_head >= d.addr.size()) throw MachineError("write on the address-tape boundary cell");
            d.addr[d.addr_head] = a->addr_write;
        }
        if (a->addr_move == Move::Left && d.addr_head > 0) --d.addr_head;
        if (a->addr_move == Move::Right && d.addr_head < d.addr.size()) ++d.addr_head;
        for (std::size_t t = 0; t < d.work.size(); ++t) {
            if (a->work_write[t] != kAny) {
                if (d.heads[t] >= d.work[t].size()) d.work[t].resize(d.heads[t] + 1, kBlank);
                d.work[t][d.heads[t]] = a->work_write[t];
            }
            if (a->work_move[t] == Move::Left && d.heads[t] > 0) --d.heads[t];
            if (a->work_move[t] == Move::Right) ++d.heads[t];
        }
        d.input = read_input(input, d.addr);
        out.push_back(std::move(d));
    }
    return out;
}

MachineDesc dual(const MachineDesc& m) {
    MachineDesc d = m;
    for (std::size_t i = 0; i < d.states.size(); ++i) {
        if (d.modes[i] == Mode::Existential)
            d.modes[i] = Mode::Universal;
        else if (d.modes[i] == Mode::Universal)
            d.modes[i] = Mode::Existential;
        if (m.is_final(static_cast<int>(i))) d.accepting[i] = !m.accepting[i];
    }
    return d;
}

MachineDesc binarize(const MachineDesc& m, int* extra_depth) {
    MachineDesc out = m;
    out.lines.clear();
    int deepest = 0;
    std::size_t fresh = 0;
    auto same_key = [](const TransitionLine& a, const TransitionLine& b) {
        return a.state == b.state && a.input == b.input && a.addr == b.addr && a.work == b.work;
    };
    std::vector<bool> done(m.lines.size(), false);
    for (std::size_t i = 0; i < m.lines.size(); ++i) {
        if (done[i]) continue;
        std::vector<const TransitionLine*> group;
        for (std::size_t j = i; j < m.lines.size(); ++j)
            if (!done[j] && same_key(m.lines[i], m.lines[j])) {
                group.push_back(&m.lines[j]);
                done[j] = true;
            }
        if (group.size() <= 2) {
            for (const auto* l : group) out.lines.push_back(*l);
            continue;
        }
        const TransitionLine& proto = *group[0];
        Mode mode = m.modes[static_cast<std::size_t>(proto.state)];
        Action noop;
        noop.work_write.assign(static_cast<std::size_t>(m.tapes), kAny);
        noop.work_move.assign(static_cast<std::size_t>(m.tapes), Move::Stay);
        // Emits lines choosing among group[lo, hi) from `state` with key `key`.
        std::function<void(int, const TransitionLine&, std::size_t, std::size_t, int)> split =
            [&](int state, const TransitionLine& key, std::size_t lo, std::size_t hi, int depth) {
                std::size_t mid = lo + (hi - lo + 1) / 2;
                for (auto [a, b] : {std::pair{lo, mid}, std::pair{mid, hi}}) {
                    TransitionLine l = key;
                    l.state = state;
                    if (b - a == 1) {
                        l.action = group[a]->action;
                        deepest = std::max(deepest, depth);
                    } else {
                        std::string name;
                        do name = m.states[static_cast<std::size_t>(proto.state)] + ".b" + std::to_string(fresh++);
                        while (out.state_index(name) >= 0);
                        int s = out.add_state(name, mode);
                        l.action = noop;
                        l.action.next = s;
                        TransitionLine any;
                        any.work.assign(static_cast<std::size_t>(m.tapes), kAny);
                        split(s, any, a, b, depth + 1);
                    }
                    out.lines.push_back(std::move(l));
                }
            };
        split(proto.state, proto, 0, group.size(), 0);
    }
    if (extra_depth) *extra_depth = deepest;
    return out;
}

// ---------------------------------------------------------------------------
// Small machines

namespace {

Action act(int next, int tapes, char aw = kAny, Move am = Move::Stay) {
    Action a;
    a.next = next;
    a.addr_write = aw;
    a.addr_move = am;
    a.work_write.assign(static_cast<std::size_t>(tapes), kAny);
    a.work_move.assign(static_cast<std::size_t>(tapes), Move::Stay);
    return a;
}

TransitionLine line(int state, char in, char addr, int tapes, Action a) {
    TransitionLine l;
    l.state = state;
    l.input = in;
    l.addr = addr;
    l.work.assign(static_cast<std::size_t>(tapes), kAny);
    l.action = std::move(a);
    return l;
}

} // namespace

MachineDesc bit0_reader() {
    MachineDesc m;
    m.tapes = 1;
    int walk = m.add_state("walk");
    int read = m.add_state("read");
    int acc = m.add_state("acc", Mode::Deterministic, true);
    int rej = m.add_state("rej");
    m.initial = walk;
    // Clear every address cell, then read at address 0.
    m.lines.push_back(line(walk, kAny, '0', 1, act(walk, 1, '0', Move::Right)));
    m.lines.push_back(line(walk, kAny, '1', 1, act(walk, 1, '0', Move::Right)));
    m.lines.push_back(line(walk, kAny, kBoundary, 1, act(read, 1)));
    m.lines.push_back(line(read, '1', kAny, 1, act(acc, 1)));
    m.lines.push_back(line(read, '0', kAny, 1, act(rej, 1)));
    m.lines.push_back(line(read, kEndmark, kAny, 1, act(rej, 1)));
    return m;
}

MachineDesc exists_one_guesser() {
    MachineDesc m;
    m.tapes = 1;
    int guess = m.add_state("guess", Mode::Existential);
    int read = m.add_state("read");
    int acc = m.add_state("acc", Mode::Deterministic, true);
    int rej = m.add_state("rej");
    m.initial = guess;
    for (char b : {'0', '1'}) m.lines.push_back(line(guess, kAny, '0', 1, act(guess, 1, b, Move::Right)));
    m.lines.push_back(line(guess, kAny, kBoundary, 1, act(read, 1)));
    m.lines.push_back(line(read, '1', kAny, 1, act(acc, 1)));
    m.lines.push_back(line(read, '0', kAny, 1, act(rej, 1)));
    m.lines.push_back(line(read, kEndmark, kAny, 1, act(rej, 1)));
    return m;
}

MachineDesc alternating_blocks(int blocks) {
    if (blocks < 1) throw MachineError("alternating_blocks needs m >= 1");
    MachineDesc m;
    m.tapes = 1;
    std::vector<int> guess;
    for (int i = 0; i < blocks; ++i)
        guess.push_back(m.add_state("block" + std::to_string(i + 1), i % 2 == 0 ? Mode::Existential : Mode::Universal));
    int acc = m.add_state("acc", Mode::Deterministic, true);
    m.initial = guess[0];
    // Each block writes two guessed bits on the work tape.
    for (int i = 0; i < blocks; ++i) {
        int mid = m.add_state("block" + std::to_string(i + 1) + "b", m.modes[static_cast<std::size_t>(guess[static_cast<std::size_t>(i)])]);
        int next = i + 1 < blocks ? guess[static_cast<std::size_t>(i + 1)] : acc;
        for (char b : {'0', '1'}) {
            Action a = act(mid, 1);
            a.work_write[0] = b;
            a.work_move[0] = Move::Right;
            m.lines.push_back(line(guess[static_cast<std::size_t>(i)], kAny, kAny, 1, a));
            Action c = act(next, 1);
            c.work_write[0] = b;
            c.work_move[0] = Move::Right;
            m.lines.push_back(line(mid, kAny, kAny, 1, c));
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// CNF instances

std::string symbol_code(char symbol) {
    switch (symbol) {
    case '0':
        return "000";
    case '1':
        return "001";
    case '#':
        return "010";
    case '+':
        return "011";
    case '-':
        return "100";
    default:
        break;
    }
    throw MachineError(std::string("no code for symbol '") + symbol + "'");
}

namespace {

std::string binary(std::uint64_t v, std::uint32_t width = 0) {
    std::string s;
    while (v) {
        s.insert(s.begin(), static_cast<char>('0' + (v & 1u)));
        v >>= 1;
    }
    if (s.empty()) s = "0";
    while (s.size() < width) s.insert(s.begin(), '0');
    return s;
}

} // namespace

std::string cnf_symbols(const CnfFormula& f, std::uint32_t* index_width) {
    if (f.empty()) throw MachineError("CNF instance has no clauses");
    std::string body;
    std::vector<std::size_t> starts;
    for (const auto& clause : f) {
        starts.push_back(body.size());
        body += '#';
        for (int lit : clause) {
            if (lit == 0) throw MachineError("literal 0 is not a variable");
            body += lit > 0 ? '+' : '-';
            body += binary(static_cast<std::uint64_t>(lit > 0 ? lit : -lit));
        }
    }
    // The index width depends on the total length, which depends on the width.
    std::uint32_t w = 1;
    for (;;) {
        std::size_t symbols = f.size() * w + body.size();
        std::uint32_t need = address_length(3 * symbols);
        if (need == w) break;
        w = need;
    }
    std::string out;
    std::size_t offset = f.size() * w;
    for (std::size_t s : starts) {
        std::uint64_t bit_address = 3 * (offset + s);
        std::string idx = binary(bit_address, w);
        if (idx.size() > w) throw MachineError("clause index does not fit its width");
        out += idx;
    }
    out += body;
    if (index_width) *index_width = w;
    return out;
}

BitString encode_cnf(const CnfFormula& f, int k) {
    std::string symbols = cnf_symbols(f);
    BitString b;
    for (char c : symbols)
        for (char bit : symbol_code(c)) b.bits.push_back(static_cast<std::uint8_t>(bit - '0'));
    std::uint64_t bound = 1;
    std::uint64_t l = log_ceil(b.size());
    for (int i = 0; i < k; ++i) bound *= l;
    if (f.size() > bound)
        throw MachineError(std::to_string(f.size()) + " clauses exceed the bound ceil(log N)^k = " + std::to_string(bound) +
                           " for N = " + std::to_string(b.size()));
    return b;
}

CnfFormula decode_cnf(const BitString& bits) {
    if (bits.size() % 3 != 0) throw MachineError("CNF encoding length is not a multiple of 3");
    std::string symbols;
    for (std::size_t i = 0; i < bits.size(); i += 3) {
        int code = bits.bits[i] * 4 + bits.bits[i + 1] * 2 + bits.bits[i + 2];
        static const char table[] = {'0', '1', '#', '+', '-'};
        if (code > 4) throw MachineError("invalid symbol code at bit " + std::to_string(i));
        symbols += table[code];
    }
    std::uint32_t w = address_length(bits.size());
    std::size_t first = symbols.find('#');
    if (first == std::string::npos || first == 0 || first % w != 0) throw MachineError("malformed index region");
    std::size_t c = first / w;
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < c; ++i) {
        std::uint64_t v = 0;
        for (std::size_t j = 0; j < w; ++j) {
            char d = symbols[i * w + j];
            if (d != '0' && d != '1') throw MachineError("index digit expected");
            v = v * 2 + static_cast<std::uint64_t>(d - '0');
        }
        if (v % 3 != 0 || v / 3 >= symbols.size() || symbols[v / 3] != '#') throw MachineError("index does not point at a clause");
        starts.push_back(v / 3);
    }
    for (std::size_t i = 0; i < c; ++i)
        if ((i == 0 && starts[i] != first) || (i > 0 && starts[i] <= starts[i - 1]))
            throw MachineError("clause indices out of order");
    CnfFormula f;
    for (std::size_t i = 0; i < c; ++i) {
        std::size_t end = i + 1 < c ? starts[i + 1] : symbols.size();
        std::vector<int> clause;
        std::size_t p = starts[i] + 1;
        while (p < end) {
            char sign = symbols[p++];
            if (sign != '+' && sign != '-') throw MachineError("literal sign expected");
            std::uint64_t v = 0;
            std::size_t digits = 0;
            while (p < end && (symbols[p] == '0' || symbols[p] == '1')) {
                v = v * 2 + static_cast<std::uint64_t>(symbols[p++] - '0');
                ++digits;
            }
            if (digits == 0 || v == 0 || v > 1u << 30) throw MachineError("bad variable id");
            clause.push_back(sign == '+' ? static_cast<int>(v) : -static_cast<int>(v));
        }
        f.push_back(std::move(clause));
    }
    if (symbols.find('#', starts.back() + 1) != std::string::npos) throw MachineError("more clauses than indices");
    return f;
}

} // namespace soplog

// Builder for the polylogCNFSAT machine. Subroutines are expanded inline: each
// call site gets its own copy of the states, parameterised by continuations.

#include "soplog/machine.hpp"

#include <functional>
#include <map>

namespace soplog {

namespace {

enum Tape : int { POS, NM1, RULER, IDX, CNT, GUESS, FLAG, LIT, SCR, DIGITS };

constexpr char kLeft = '^'; // left end marker of the work tapes

class Builder {
public:
    explicit Builder(int k) : k_(k) {
        m.tapes = DIGITS + k;
        m.alphabet = "01_#+-^";
        accept = m.add_state("accept", Mode::Deterministic, true);
        reject = m.add_state("reject");
    }

    class Rule {
    public:
        Rule(Builder& b, int s) : b_(b) {
            l_.state = s;
            l_.work.assign(static_cast<std::size_t>(b.m.tapes), kAny);
            l_.action.work_write.assign(static_cast<std::size_t>(b.m.tapes), kAny);
            l_.action.work_move.assign(static_cast<std::size_t>(b.m.tapes), Move::Stay);
        }
        Rule& in(char c) { l_.input = c; return *this; }
        Rule& addr(char c) { l_.addr = c; return *this; }
        Rule& on(int t, char c) { l_.work[static_cast<std::size_t>(t)] = c; return *this; }
        Rule& aw(char c) { l_.action.addr_write = c; return *this; }
        // Address moves are mirrored on the position tape.
        Rule& am(Move mv) {
            l_.action.addr_move = mv;
            l_.action.work_move[POS] = mv;
            return *this;
        }
        Rule& wr(int t, char c, Move mv = Move::Stay) {
            l_.action.work_write[static_cast<std::size_t>(t)] = c;
            l_.action.work_move[static_cast<std::size_t>(t)] = mv;
            return *this;
        }
        Rule& mv(int t, Move mv) { l_.action.work_move[static_cast<std::size_t>(t)] = mv; return *this; }
        void go(int next) {
            l_.action.next = next;
            b_.m.lines.push_back(l_);
        }

    private:
        Builder& b_;
        TransitionLine l_;
    };

    Rule rule(int s) { return Rule(*this, s); }

    int fresh(const std::string& base, Mode mode = Mode::Deterministic) {
        return m.add_state(base + "." + std::to_string(counter_++), mode);
    }

    // Single no-op step.
    int noop(const std::string& base, int next) {
        int s = fresh(base);
        rule(s).go(next);
        return s;
    }

    // Address value + 1: walk to the boundary, then carry leftwards.
    int inc_addr(int cont) {
        int right = fresh("inc"), carry = fresh("inc");
        rule(right).addr('0').am(Move::Right).go(right);
        rule(right).addr('1').am(Move::Right).go(right);
        rule(right).addr(kBoundary).am(Move::Left).go(carry);
        rule(carry).addr('1').aw('0').am(Move::Left).go(carry);
        rule(carry).addr('0').aw('1').go(cont);
        return right;
    }

    // Reads the 3-bit symbol at the address and advances the address by 3.
    // Symbols missing from `conts` and invalid codes reject.
    int read_symbol(const std::map<char, int>& conts) {
        auto target = [&](char c) {
            auto it = conts.find(c);
            return it == conts.end() ? reject : it->second;
        };
        std::map<int, int> after; // code -> state after the last increment
        for (int code = 0; code < 8; ++code) {
            static const char table[] = {'0', '1', '#', '+', '-'};
            after[code] = code < 5 ? inc_addr(target(table[code])) : reject;
        }
        // level states read the bit at position 2, 1, 0 of the code
        std::function<int(int, int)> level = [&](int depth, int prefix) -> int {
            int s = fresh("sym");
            for (int b = 0; b < 2; ++b) {
                int code = prefix * 2 + b;
                int next = depth == 2 ? after[code] : inc_addr(level(depth + 1, code));
                rule(s).in(static_cast<char>('0' + b)).go(next);
            }
            rule(s).in(kEndmark).go(depth == 0 ? target(kEndmark) : reject);
            return s;
        };
        return level(0, 0);
    }

    // Head of the address tape to cell 0, located through the position tape.
    int rewind_addr(int cont) {
        int s = fresh("home");
        rule(s).on(POS, '#').go(cont);
        rule(s).am(Move::Left).go(s);
        return s;
    }

    // Appends the address tape to `tape`, followed by `terminator`.
    int copy_addr_to(int tape, char terminator, int cont) {
        int s = fresh("save");
        rule(s).addr('0').wr(tape, '0', Move::Right).am(Move::Right).go(s);
        rule(s).addr('1').wr(tape, '1', Move::Right).am(Move::Right).go(s);
        rule(s).addr(kBoundary).wr(tape, terminator, Move::Right).go(cont);
        return rewind_addr(s);
    }

    // Loads the block under the head of `tape` onto the address tape and
    // leaves the tape head past the block's '#'.
    int copy_to_addr(int tape, int cont) {
        int s = fresh("load");
        rule(s).on(tape, '0').aw('0').am(Move::Right).mv(tape, Move::Right).go(s);
        rule(s).on(tape, '1').aw('1').am(Move::Right).mv(tape, Move::Right).go(s);
        rule(s).on(tape, '#').mv(tape, Move::Right).go(cont);
        return rewind_addr(s);
    }

    // Head of `tape` to cell 1, just right of the '^' marker.
    int rewind_tape(int tape, int cont) {
        int s = fresh("rew");
        rule(s).on(tape, kLeft).mv(tape, Move::Right).go(cont);
        rule(s).mv(tape, Move::Left).go(s);
        return s;
    }

    // Head of `tape` to the first cell of the current block.
    int block_start(int tape, int cont) {
        int s = fresh("bstart");
        rule(s).on(tape, '#').mv(tape, Move::Right).go(cont);
        rule(s).on(tape, kLeft).mv(tape, Move::Right).go(cont);
        rule(s).mv(tape, Move::Left).go(s);
        int first = fresh("bstart");
        rule(first).mv(tape, Move::Left).go(s);
        return first;
    }

    // Head of `tape` past the next '#'.
    int skip_block(int tape, int cont) {
        int s = fresh("skip");
        rule(s).on(tape, '#').mv(tape, Move::Right).go(cont);
        rule(s).mv(tape, Move::Right).go(s);
        return s;
    }

    // Base-L counter on the digit tapes; overflow past L^k rejects.
    int inc_counter(int cont) {
        int carry = reject;
        for (int j = k_ - 1; j >= 0; --j) {
            int d = DIGITS + j;
            int step = fresh("count"), check = fresh("count");
            rule(step).mv(d, Move::Right).go(check);
            rule(check).on(d, '1').go(cont);
            rule(check).on(d, kBlank).go(rewind_tape(d, carry));
            carry = step;
        }
        return carry;
    }

    MachineDesc m;
    int accept = 0, reject = 0;

private:
    int k_;
    int counter_ = 0;
};

} // namespace

MachineDesc polylog_cnf_sat_machine(int k) {
    if (k < 1) throw MachineError("polylogCNFSAT machine needs k >= 1");
    Builder b(k);
    const int rulers_end = DIGITS + k;
    auto all_rulers = [&](Builder::Rule r, char write, Move mv) {
        r.wr(RULER, write, mv);
        for (int d = DIGITS; d < rulers_end; ++d) r.wr(d, write, mv);
        return r;
    };

    // Phase 7
    int phase7 = b.accept;

    // Phase 6: collect the literals, rejecting a complementary pair.
    int p6 = b.fresh("p6");
    int p6_init = b.fresh("p6");
    {
        int app = b.fresh("p6.append");
        for (char c : {'+', '-', '0', '1'})
            b.rule(app).on(SCR, c).wr(LIT, c, Move::Right).mv(SCR, Move::Right).go(app);
        b.rule(app).on(SCR, '#').wr(LIT, '#', Move::Right).go(p6);

        int cmp_lit = b.fresh("p6.lit");
        int sgn = b.fresh("p6.sign");
        int dig = b.fresh("p6.id");
        int next_lit = b.skip_block(LIT, b.rewind_tape(SCR, cmp_lit));
        b.rule(cmp_lit).on(LIT, kBlank).go(b.rewind_tape(SCR, app));
        b.rule(cmp_lit).go(sgn);
        b.rule(sgn).on(LIT, '+').on(SCR, '+').go(next_lit);
        b.rule(sgn).on(LIT, '-').on(SCR, '-').go(next_lit);
        b.rule(sgn).on(LIT, '+').on(SCR, '-').mv(LIT, Move::Right).mv(SCR, Move::Right).go(dig);
        b.rule(sgn).on(LIT, '-').on(SCR, '+').mv(LIT, Move::Right).mv(SCR, Move::Right).go(dig);
        for (char c : {'0', '1'}) b.rule(dig).on(LIT, c).on(SCR, c).mv(LIT, Move::Right).mv(SCR, Move::Right).go(dig);
        b.rule(dig).on(LIT, '#').on(SCR, '#').go(b.reject);
        b.rule(dig).go(next_lit);

        int compare = b.rewind_tape(LIT, b.rewind_tape(SCR, cmp_lit));
        int id = b.fresh("p6.read");
        int end_id = b.fresh("p6.end");
        b.rule(end_id).wr(SCR, '#', Move::Right).go(compare);
        int digit0 = b.fresh("p6.d"), digit1 = b.fresh("p6.d");
        b.rule(digit0).wr(SCR, '0', Move::Right).go(id);
        b.rule(digit1).wr(SCR, '1', Move::Right).go(id);
        int id_entry = b.read_symbol({{'0', digit0}, {'1', digit1}, {'#', end_id}, {'+', end_id}, {'-', end_id}, {kEndmark, end_id}});
        b.rule(id).go(id_entry);

        int pos = b.fresh("p6.sign"), neg = b.fresh("p6.sign");
        b.rule(pos).wr(SCR, '+', Move::Right).go(id);
        b.rule(neg).wr(SCR, '-', Move::Right).go(id);
        int sign = b.read_symbol({{'+', pos}, {'-', neg}});
        b.rule(p6).on(GUESS, kBlank).go(phase7);
        b.rule(p6).go(b.rewind_tape(SCR, b.copy_to_addr(GUESS, sign)));
        b.rule(p6_init).wr(LIT, kLeft, Move::Right).wr(SCR, kLeft, Move::Right).go(b.rewind_tape(GUESS, p6));
    }

    // Phase 5: every guessed address holds a literal sign.
    int p5 = b.fresh("p5");
    int phase5 = b.rewind_tape(GUESS, p5);
    b.rule(p5).on(GUESS, kBlank).go(p6_init);
    b.rule(p5).go(b.copy_to_addr(GUESS, b.read_symbol({{'+', p5}, {'-', p5}})));

    // Phase 4: the guesses fall in pairwise distinct clauses.
    int p4_guess = b.fresh("p4");
    int phase4 = b.fresh("p4");
    {
        int fill = b.fresh("p4.flags");
        b.rule(phase4).wr(FLAG, kLeft, Move::Right).go(b.rewind_tape(CNT, fill));
        b.rule(fill).on(CNT, '1').wr(FLAG, '0', Move::Right).mv(CNT, Move::Right).go(fill);
        b.rule(fill).on(CNT, kBlank).go(b.rewind_tape(GUESS, p4_guess));

        int block = b.fresh("p4.block"), cmp = b.fresh("p4.cmp"), flag = b.fresh("p4.flag");
        b.rule(p4_guess).on(GUESS, kBlank).go(phase5);
        b.rule(p4_guess).go(b.rewind_tape(IDX, b.rewind_tape(FLAG, block)));
        int found = b.fresh("p4.found");
        b.rule(found).mv(FLAG, Move::Left).go(flag);
        b.rule(block).on(IDX, kBlank).go(found);
        b.rule(block).go(cmp);
        int flag_right = b.fresh("p4.next");
        b.rule(flag_right).mv(FLAG, Move::Right).go(block);
        int le = b.block_start(GUESS, b.skip_block(IDX, flag_right));
        for (char c : {'0', '1'}) b.rule(cmp).on(IDX, c).on(GUESS, c).mv(IDX, Move::Right).mv(GUESS, Move::Right).go(cmp);
        b.rule(cmp).on(IDX, '#').on(GUESS, '#').go(le);
        b.rule(cmp).on(IDX, '0').on(GUESS, '1').go(le);
        b.rule(cmp).on(IDX, '1').on(GUESS, '0').go(found);
        b.rule(flag).on(FLAG, kLeft).go(b.reject);
        b.rule(flag).on(FLAG, '1').go(b.reject);
        b.rule(flag).on(FLAG, '0').wr(FLAG, '1').go(b.skip_block(GUESS, p4_guess));
    }

    // Phase 3: one existentially chosen literal address per clause.
    int p3_clause = b.fresh("p3");
    int phase3 = b.fresh("p3");
    {
        int bound = b.fresh("p3.choose", Mode::Existential);
        b.rule(phase3).wr(GUESS, kLeft, Move::Right).go(b.rewind_tape(IDX, p3_clause));
        b.rule(p3_clause).on(IDX, kBlank).go(phase4);
        b.rule(p3_clause).go(b.copy_to_addr(IDX, b.read_symbol({{'#', bound}})));
        int take = b.noop("p3.take", b.copy_addr_to(GUESS, '#', p3_clause));
        int skip = b.noop("p3.skip", b.read_symbol({{'0', bound}, {'1', bound}, {'+', bound}, {'-', bound}}));
        b.rule(bound).go(take);
        b.rule(bound).go(skip);
    }

    // Phase 2: copy the clause indices, count them in unary, and check c <= L^k.
    int phase2 = b.fresh("p2");
    {
        int bound_loop = b.fresh("p2.bound"), bound_next = b.fresh("p2.bound");
        b.rule(bound_loop).on(CNT, '1').go(b.inc_counter(bound_next));
        b.rule(bound_loop).on(CNT, kBlank).go(phase3);
        b.rule(bound_next).mv(CNT, Move::Right).go(bound_loop);
        int skip_first = b.fresh("p2.bound");
        b.rule(skip_first).mv(CNT, Move::Right).go(bound_loop);
        int count_check = b.rewind_tape(CNT, skip_first);

        int loop = b.fresh("p2");
        int end = b.fresh("p2.end"), end_ruler = b.fresh("p2.end"), end_count = b.fresh("p2.end");
        b.rule(end).mv(RULER, Move::Left).go(end_ruler);
        b.rule(end_ruler).on(RULER, kLeft).mv(RULER, Move::Right).mv(CNT, Move::Left).go(end_count);
        b.rule(end_ruler).on(RULER, '1').go(b.reject);
        b.rule(end_count).on(CNT, kLeft).go(b.reject);
        b.rule(end_count).on(CNT, '1').mv(CNT, Move::Right).go(count_check);

        int check = b.fresh("p2.digit");
        int block_done = b.rewind_tape(RULER, loop);
        b.rule(check).on(RULER, '1').go(loop);
        b.rule(check).on(RULER, kBlank).wr(IDX, '#', Move::Right).wr(CNT, '1', Move::Right).go(block_done);
        int d0 = b.fresh("p2.digit"), d1 = b.fresh("p2.digit");
        b.rule(d0).wr(IDX, '0', Move::Right).mv(RULER, Move::Right).go(check);
        b.rule(d1).wr(IDX, '1', Move::Right).mv(RULER, Move::Right).go(check);
        b.rule(loop).go(b.read_symbol({{'0', d0}, {'1', d1}, {'#', end}}));
        b.rule(phase2).wr(IDX, kLeft, Move::Right).wr(CNT, kLeft, Move::Right).go(loop);
    }

    // Phase 1: binary search for N - 1 with the endmark, building the position
    // tape and the rulers on the way; keep N - 1 and clear the address tape.
    int start = b.fresh("p1");
    {
        int set_first = b.fresh("p1.set"), set = b.fresh("p1.set"), test = b.fresh("p1.test");
        all_rulers(b.rule(start), kLeft, Move::Right).go(set_first);
        all_rulers(b.rule(set_first).addr('0').aw('1').wr(POS, '#'), '1', Move::Right).go(test);
        all_rulers(b.rule(set).addr('0').aw('1').wr(POS, '1'), '1', Move::Right).go(test);
        b.rule(test).in(kEndmark).aw('0').am(Move::Right).go(set);
        b.rule(test).in('0').am(Move::Right).go(set);
        b.rule(test).in('1').am(Move::Right).go(set);

        int rulers_home = b.fresh("p1.rulers");
        all_rulers(b.rule(rulers_home).on(RULER, kLeft), kAny, Move::Right).go(phase2);
        all_rulers(b.rule(rulers_home), kAny, Move::Left).go(rulers_home);
        int clear = b.fresh("p1.clear");
        b.rule(clear).addr('0').am(Move::Right).go(clear);
        b.rule(clear).addr('1').aw('0').am(Move::Right).go(clear);
        b.rule(clear).addr(kBoundary).go(rulers_home);
        b.rule(set).addr(kBoundary).go(b.copy_addr_to(NM1, '#', b.rewind_addr(clear)));
    }
    b.m.initial = start;
    b.m.check();
    return b.m;
}

} // namespace soplog

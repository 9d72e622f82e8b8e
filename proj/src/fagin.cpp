#include "soplog/fagin.hpp"

#include "soplog/error.hpp"
#include "soplog/normalform.hpp"
#include "soplog/stdlib.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace soplog::fagin {

using stdlib::NumRef;

namespace {

const Term kZero = Term::constant("ZERO");
const Term kOne = Term::constant("ONE");

using Terms = std::vector<Term>;
using Vars = std::vector<std::string>;

Terms cat(Terms a, const Terms& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

Terms zeros(int k) { return Terms(static_cast<std::size_t>(k), kZero); }

Formula at(const SOVar& X, Terms ts, bool neg = false) { return Formula::so_atom(X, std::move(ts), neg); }
Formula bit(const SOVar& X, Terms ts, char b, bool neg = false) {
    ts.push_back(b == '1' ? kOne : kZero);
    return Formula::so_atom(X, std::move(ts), neg);
}
Formula conj(std::vector<Formula> v) { return Formula::conj(std::move(v)); }
Formula disj(std::vector<Formula> v) { return Formula::disj(std::move(v)); }

std::string num(std::size_t i) { return std::to_string(i); }

// ---------------------------------------------------------------------------
// Roster layout, shared by the compiler and the witness builder.

struct DivVars {
    SOVar quot, rem, R, S, W, A, V;
};

struct RelVars {
    SOVar D, DW;
    std::vector<DivVars> outer; // D div n^(r-j), j = 1..r
    std::vector<DivVars> inner; // that quotient div n; its remainder is coordinate j
};

struct ConstVars {
    SOVar O, OW, Y, YW; // offset into the constant, and LOGN-1 minus it
};

struct Layout {
    int k = 0, ka = 0, tapes = 0;
    std::string symbols;
    SOVar I, Ip, Ipp;
    std::vector<std::vector<SOVar>> T, RW;
    std::vector<SOVar> H, S;
    SOVar L[3];
    SOVar C, AH, AB, RA[2], G, F;
    SOVar M0, Mx, MxW;
    std::vector<SOVar> M;          // M[i] = n^i, i >= 1
    std::vector<SOVar> MR, MS, MW; // BMULT internals for M[i], i >= 2
    std::vector<SOVar> P, PW;      // P[0..p], PW[i] for P[i]
    std::vector<SOVar> N, NW;      // N[1..q]
    SOVar NL;
    std::vector<SOVar> E, EW; // E[j] = P[p] + N[j], 1 <= j < q
    SOVar Pend, PendW;        // length of bin(A); aliases P[p] when q = 0
    std::vector<RelVars> rel;
    std::vector<ConstVars> cst;
    std::vector<RosterEntry> roster;
    int rmax = 1;

    SOVar add(const std::string& name, int arity, int exponent, const std::string& role) {
        SOVar v{name, arity, exponent};
        roster.push_back({v, role});
        return v;
    }
};

std::string work_symbols(const MachineDesc& m) {
    std::string s = "01_";
    for (char c : m.alphabet)
        if (s.find(c) == std::string::npos) s += c;
    return s;
}

Layout make_layout(const MachineDesc& m, const Vocabulary& vocab, int k, int ka) {
    Layout L;
    L.k = k;
    L.ka = ka;
    L.tapes = m.tapes;
    L.symbols = work_symbols(m);
    std::size_t p = vocab.relations().size(), q = vocab.constants().size();
    for (const auto& r : vocab.relations()) L.rmax = std::max(L.rmax, r.arity);

    L.I = L.add("I", k, k, "time and work positions");
    L.Ip = L.add("Ip", ka, ka, "address positions");
    L.Ipp = L.add("Ipp", 2 * ka, 2 * ka, "multiplication positions");
    auto tape_tag = [&](int j) { return m.tapes == 1 ? std::string() : num(static_cast<std::size_t>(j)) + "_"; };
    for (int j = 0; j < m.tapes; ++j) {
        std::vector<SOVar> row;
        for (std::size_t s = 0; s < L.symbols.size(); ++s)
            row.push_back(L.add("T" + tape_tag(j) + num(s), 2 * k, 2 * k,
                                std::string("work tape content '") + L.symbols[s] + "'"));
        L.T.push_back(row);
    }
    for (int j = 0; j < m.tapes; ++j)
        L.H.push_back(L.add(m.tapes == 1 ? "H" : "H" + num(static_cast<std::size_t>(j)), 2 * k, k, "work head"));
    for (std::size_t s = 0; s < m.states.size(); ++s) L.S.push_back(L.add("S" + num(s), k, k, "state " + m.states[s]));
    for (int i = 0; i < 3; ++i) L.L[i] = L.add("L" + num(static_cast<std::size_t>(i)), k, k, "input read");
    for (int j = 0; j < m.tapes; ++j) {
        std::vector<SOVar> row;
        for (std::size_t s = 0; s < L.symbols.size(); ++s)
            row.push_back(L.add("RW" + tape_tag(j) + num(s), k, k, std::string("work read '") + L.symbols[s] + "'"));
        L.RW.push_back(row);
    }
    L.C = L.add("C", k + ka + 1, k + ka, "address tape value");
    L.AH = L.add("AH", k + ka, k, "address head");
    L.AB = L.add("AB", k, k, "address head on the boundary cell");
    L.RA[0] = L.add("RA0", k, k, "address read '0'");
    L.RA[1] = L.add("RA1", k, k, "address read '1'");
    L.G = L.add("G", k, k, "choice");
    L.F = L.add("F", ka, 0, "first address cell");

    int numa = ka + 1, multa = 2 * ka + 1;
    L.M0 = L.add("M0", numa, ka, "number 1");
    L.Mx = L.add("Mx", numa, ka, "number n-1");
    L.MxW = L.add("MxW", numa, ka, "carries");
    L.M.resize(static_cast<std::size_t>(L.rmax) + 1);
    L.MR.resize(L.M.size());
    L.MS.resize(L.M.size());
    L.MW.resize(L.M.size());
    L.M[0] = L.M0;
    L.M[1] = L.add("M1", numa, ka, "number n");
    for (int i = 2; i <= L.rmax; ++i) {
        std::string s = num(static_cast<std::size_t>(i));
        L.M[i] = L.add("M" + s, numa, ka, "number n^" + s);
        L.MR[i] = L.add("MR" + s, multa, 2 * ka, "multiplication internals");
        L.MS[i] = L.add("MS" + s, multa, 2 * ka, "multiplication internals");
        L.MW[i] = L.add("MW" + s, multa, 2 * ka, "multiplication internals");
    }
    L.P.resize(p + 1);
    L.PW.resize(p + 1);
    L.P[0] = L.add("P0", numa, ka, "start of relation 1");
    for (std::size_t i = 1; i <= p; ++i) {
        L.P[i] = L.add("P" + num(i), numa, ka, i < p ? "start of relation " + num(i + 1) : "start of the constants");
        L.PW[i] = L.add("PW" + num(i), numa, ka, "carries");
    }
    if (q > 0) {
        L.N.resize(q + 1);
        L.NW.resize(q + 1);
        L.N[1] = L.add("N1", numa, ka, "number LOGN");
        for (std::size_t i = 2; i <= q; ++i) {
            L.N[i] = L.add("N" + num(i), numa, ka, num(i) + " times LOGN");
            L.NW[i] = L.add("NW" + num(i), numa, ka, "carries");
        }
        L.NL = L.add("NL", numa, ka, "number LOGN-1");
        L.E.resize(q);
        L.EW.resize(q);
        for (std::size_t j = 1; j < q; ++j) {
            L.E[j] = L.add("E" + num(j), numa, ka, "start of constant " + num(j + 1));
            L.EW[j] = L.add("EW" + num(j), numa, ka, "carries");
        }
        L.Pend = L.add("P" + num(p + 1), numa, ka, "length of the encoding");
        L.PendW = L.add("PW" + num(p + 1), numa, ka, "carries");
    } else {
        L.Pend = L.P[p];
    }

    int tnum = k + ka + 1, tmul = k + 2 * ka + 1;
    auto div = [&](const std::string& base) {
        DivVars d;
        d.quot = L.add(base, tnum, k + ka, "quotient");
        d.rem = L.add(base + "r", tnum, k + ka, "remainder");
        d.R = L.add(base + "R", tmul, k + 2 * ka, "division internals");
        d.S = L.add(base + "S", tmul, k + 2 * ka, "division internals");
        d.W = L.add(base + "W", tmul, k + 2 * ka, "division internals");
        d.A = L.add(base + "A", tnum, k + ka, "division internals");
        d.V = L.add(base + "V", tnum, k + ka, "division internals");
        return d;
    };
    for (std::size_t i = 1; i <= p; ++i) {
        RelVars r;
        r.D = L.add("D" + num(i), tnum, k + ka, "offset into relation " + num(i));
        r.DW = L.add("DW" + num(i), tnum, k + ka, "carries");
        for (int j = 1; j <= vocab.relations()[i - 1].arity; ++j) {
            std::string tag = num(i) + "_" + num(static_cast<std::size_t>(j));
            r.outer.push_back(div("Q" + tag));
            r.inner.push_back(div("X" + tag));
        }
        L.rel.push_back(std::move(r));
    }
    for (std::size_t j = 1; j <= q; ++j) {
        ConstVars c;
        c.O = L.add("O" + num(j), tnum, k + ka, "offset into constant " + num(j));
        c.OW = L.add("OW" + num(j), tnum, k + ka, "carries");
        c.Y = L.add("Y" + num(j), tnum, k + ka, "bit index in constant " + num(j));
        c.YW = L.add("YW" + num(j), tnum, k + ka, "carries");
        L.cst.push_back(c);
    }
    return L;
}

// ---------------------------------------------------------------------------
// Sentence construction

class Compiler {
public:
    Compiler(const MachineDesc& m, const Vocabulary& vocab, const Layout& L) : m_(m), vocab_(vocab), L_(L), k_(L.k), ka_(L.ka) {}

    Formula build() {
        std::vector<Formula> parts;
        parts.push_back(stdlib::def_k(k_, L_.I, names_));
        parts.push_back(stdlib::def_k(ka_, L_.Ip, names_));
        parts.push_back(stdlib::def_k(2 * ka_, L_.Ipp, names_));
        parts.push_back(tape());
        parts.push_back(heads());
        parts.push_back(states());
        parts.push_back(reads());
        parts.push_back(address());
        parts.push_back(steps());
        parts.push_back(numbers());
        parts.push_back(input_link());
        Formula body = conj(std::move(parts));
        return body;
    }

private:
    Vars vars(int k, const char* hint) {
        Vars v;
        for (int i = 0; i < k; ++i) v.push_back(names_.fresh(hint));
        return v;
    }

    std::size_t blank() const { return 2; }

    Formula forall(const Vars& v, const SOVar& guard, Formula body) { return Formula::forall_in(v, guard, std::move(body)); }

    Formula tape() {
        std::vector<Formula> c;
        for (const auto& row : L_.T) {
            Vars p = vars(k_, "p");
            c.push_back(forall(p, L_.I, at(row[blank()], cat(zeros(k_), var_terms(p)))));
            Vars t = vars(k_, "t"), p2 = vars(k_, "p");
            Terms tp = cat(var_terms(t), var_terms(p2));
            std::vector<Formula> some, excl;
            for (std::size_t s = 0; s < row.size(); ++s) {
                some.push_back(at(row[s], tp));
                for (std::size_t s2 = s + 1; s2 < row.size(); ++s2) excl.push_back(disj({at(row[s], tp, true), at(row[s2], tp, true)}));
            }
            excl.insert(excl.begin(), disj(std::move(some)));
            c.push_back(forall(t, L_.I, forall(p2, L_.I, conj(std::move(excl)))));
        }
        return conj(std::move(c));
    }

    Formula heads() {
        std::vector<Formula> c;
        for (const SOVar& H : L_.H) {
            c.push_back(at(H, zeros(2 * k_)));
            {
                Vars t = vars(k_, "t"), p = vars(k_, "p");
                c.push_back(forall(t, L_.I, Formula::exists(p, conj({at(L_.I, var_terms(p)), at(H, cat(var_terms(t), var_terms(p)))}))));
            }
            {
                Vars t = vars(k_, "t"), p = vars(k_, "p"), p2 = vars(k_, "p");
                Terms tt = var_terms(t);
                c.push_back(forall(t, L_.I, forall(p, L_.I, forall(p2, L_.I, disj({at(H, cat(tt, var_terms(p)), true),
                                                                                      at(H, cat(tt, var_terms(p2)), true),
                                                                                      stdlib::tuple_eq(var_terms(p), var_terms(p2))})))));
            }
            {
                // the head moved by at most one cell since the previous step
                Vars t = vars(k_, "t"), p = vars(k_, "p"), tp = vars(k_, "t"), q1 = vars(k_, "p"), q2 = vars(k_, "p");
                Terms tt = var_terms(t), pt = var_terms(p), prev = var_terms(tp);
                Formula before = disj({at(H, cat(prev, pt)),
                                       Formula::exists(q1, conj({stdlib::succ_k(k_, var_terms(q1), pt), at(H, cat(prev, var_terms(q1)))})),
                                       Formula::exists(q2, conj({stdlib::succ_k(k_, pt, var_terms(q2)), at(H, cat(prev, var_terms(q2)))}))});
                c.push_back(forall(t, L_.I, forall(p, L_.I, disj({stdlib::is_zero_tuple(tt), at(H, cat(tt, pt), true),
                                                                   Formula::exists(tp, conj({stdlib::succ_k(k_, prev, tt), before}))}))));
            }
        }
        return conj(std::move(c));
    }

    Formula states() {
        std::vector<Formula> c;
        c.push_back(at(L_.S[static_cast<std::size_t>(m_.initial)], zeros(k_)));
        {
            Vars t = vars(k_, "t");
            std::vector<Formula> some{stdlib::is_zero_tuple(var_terms(t))};
            for (const auto& S : L_.S) some.push_back(at(S, var_terms(t)));
            c.push_back(forall(t, L_.I, disj(std::move(some))));
        }
        {
            Vars tf = vars(k_, "t"), t = vars(k_, "t");
            std::vector<Formula> acc;
            for (std::size_t q = 0; q < L_.S.size(); ++q)
                if (m_.accepting[q] && m_.is_final(static_cast<int>(q))) acc.push_back(at(L_.S[q], var_terms(tf)));
            c.push_back(Formula::exists(tf, conj({at(L_.I, var_terms(tf)),
                                                  forall(t, L_.I, stdlib::leq_k(k_, var_terms(t), var_terms(tf))),
                                                  disj(std::move(acc))})));
        }
        {
            Vars t = vars(k_, "t");
            Terms tt = var_terms(t);
            std::vector<Formula> excl;
            for (std::size_t i = 0; i < L_.S.size(); ++i)
                for (std::size_t j = i + 1; j < L_.S.size(); ++j) excl.push_back(disj({at(L_.S[i], tt, true), at(L_.S[j], tt, true)}));
            if (!excl.empty()) c.push_back(forall(t, L_.I, conj(std::move(excl))));
        }
        return conj(std::move(c));
    }

    // Exactly one of the given atoms at t.
    static Formula exactly_one(const std::vector<SOVar>& xs, const Terms& t) {
        std::vector<Formula> c;
        std::vector<Formula> some;
        for (const auto& x : xs) some.push_back(at(x, t));
        c.push_back(disj(std::move(some)));
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = i + 1; j < xs.size(); ++j) c.push_back(disj({at(xs[i], t, true), at(xs[j], t, true)}));
        return conj(std::move(c));
    }

    Formula reads() {
        std::vector<Formula> c;
        {
            Vars t = vars(k_, "t");
            c.push_back(forall(t, L_.I, exactly_one({L_.L[0], L_.L[1], L_.L[2]}, var_terms(t))));
        }
        for (std::size_t j = 0; j < L_.T.size(); ++j) {
            Vars t = vars(k_, "t"), p = vars(k_, "p");
            Terms tt = var_terms(t), tp = cat(tt, var_terms(p));
            std::vector<Formula> def;
            for (std::size_t s = 0; s < L_.symbols.size(); ++s)
                def.push_back(disj({at(L_.H[j], tp, true), at(L_.T[j][s], tp, true), at(L_.RW[j][s], tt)}));
            c.push_back(forall(t, L_.I, forall(p, L_.I, conj(std::move(def)))));
            Vars t2 = vars(k_, "t");
            std::vector<Formula> excl;
            for (std::size_t s = 0; s < L_.symbols.size(); ++s)
                for (std::size_t s2 = s + 1; s2 < L_.symbols.size(); ++s2)
                    excl.push_back(disj({at(L_.RW[j][s], var_terms(t2), true), at(L_.RW[j][s2], var_terms(t2), true)}));
            c.push_back(forall(t2, L_.I, conj(std::move(excl))));
        }
        return conj(std::move(c));
    }

    Formula address() {
        std::vector<Formula> c;
        {
            Vars t = vars(k_, "t"), d = vars(ka_, "d");
            Terms tt = var_terms(t);
            c.push_back(forall(t, L_.I, disj({at(L_.AB, tt), Formula::exists(d, conj({at(L_.Ip, var_terms(d)), at(L_.AH, cat(tt, var_terms(d)))}))})));
        }
        {
            Vars t = vars(k_, "t"), d = vars(ka_, "d"), d2 = vars(ka_, "d");
            Terms tt = var_terms(t), td = cat(tt, var_terms(d));
            std::vector<Formula> def{disj({at(L_.AB, tt, true), at(L_.AH, td, true)})};
            for (char b : {'0', '1'})
                def.push_back(disj({at(L_.AH, td, true), bit(L_.C, td, b, true), at(L_.RA[b - '0'], tt)}));
            def.push_back(forall(d2, L_.Ip, disj({at(L_.AH, td, true), at(L_.AH, cat(tt, var_terms(d2)), true),
                                                  stdlib::tuple_eq(var_terms(d), var_terms(d2))})));
            c.push_back(forall(t, L_.I, forall(d, L_.Ip, conj(std::move(def)))));
        }
        {
            Vars t = vars(k_, "t");
            Terms tt = var_terms(t);
            c.push_back(forall(t, L_.I, conj({disj({at(L_.RA[0], tt, true), at(L_.RA[1], tt, true)}),
                                              disj({at(L_.RA[0], tt, true), at(L_.AB, tt, true)}),
                                              disj({at(L_.RA[1], tt, true), at(L_.AB, tt, true)})})));
        }
        {
            Vars t = vars(k_, "t");
            c.push_back(forall(t, L_.I, stdlib::bin_with(ka_, NumRef(L_.C, var_terms(t)), L_.Ip, names_)));
            Vars d = vars(ka_, "d");
            c.push_back(forall(d, L_.Ip, bit(L_.C, cat(zeros(k_), var_terms(d)), '0')));
        }
        {
            // F is the position of the leading one of the input length
            Vars d = vars(ka_, "d"), d2 = vars(ka_, "d");
            Terms dt = var_terms(d);
            c.push_back(Formula::exists(d, conj({at(L_.Ip, dt), at(L_.F, dt), bit(L_.Pend, dt, '1'),
                                                 forall(d2, L_.Ip, disj({stdlib::leq_k(ka_, var_terms(d2), dt),
                                                                         bit(L_.Pend, var_terms(d2), '0')}))})));
            Vars d3 = vars(ka_, "d");
            c.push_back(forall(d3, L_.Ip, disj({at(L_.F, var_terms(d3), true), at(L_.AH, cat(zeros(k_), var_terms(d3)))})));
        }
        return conj(std::move(c));
    }

    // Cell under the address head keeps its bit, or takes `w`.
    Formula address_write(const Terms& t, const Terms& t2, char w) {
        Vars d = vars(ka_, "d");
        Terms dt = var_terms(d);
        if (w == kAny) {
            std::string b = names_.fresh("b");
            return forall(d, L_.Ip, disj({at(L_.AH, cat(t, dt), true),
                                          Formula::exists(b, conj({at(L_.C, cat(cat(t, dt), {Term::var(b)})),
                                                                   at(L_.C, cat(cat(t2, dt), {Term::var(b)}))}))}));
        }
        return forall(d, L_.Ip, disj({at(L_.AH, cat(t, dt), true), bit(L_.C, cat(t2, dt), w)}));
    }

    // Cell i of the address tape is position La-1-i of the number, so moving
    // right walks down the positions and off position 0 onto the boundary.
    Formula address_move(const Terms& t, const Terms& t2, Move mv) {
        Vars d = vars(ka_, "d"), d2 = vars(ka_, "d");
        Terms dt = var_terms(d), d2t = var_terms(d2);
        Formula from_cell, from_boundary;
        switch (mv) {
        case Move::Stay:
            from_boundary = disj({at(L_.AB, t, true), at(L_.AB, t2)});
            from_cell = at(L_.AH, cat(t2, dt));
            break;
        case Move::Right:
            from_boundary = disj({at(L_.AB, t, true), at(L_.AB, t2)});
            from_cell = disj({conj({stdlib::is_zero_tuple(dt), at(L_.AB, t2)}),
                              Formula::exists(d2, conj({stdlib::succ_k(ka_, d2t, dt), at(L_.AH, cat(t2, d2t))}))});
            break;
        case Move::Left:
            from_boundary = disj({at(L_.AB, t, true), at(L_.AH, cat(t2, zeros(ka_)))});
            from_cell = disj({conj({at(L_.F, dt), at(L_.AH, cat(t2, dt))}),
                              conj({at(L_.F, dt, true),
                                    Formula::exists(d2, conj({stdlib::succ_k(ka_, dt, d2t), at(L_.AH, cat(t2, d2t))}))})});
            break;
        }
        return conj({from_boundary, forall(d, L_.Ip, disj({at(L_.AH, cat(t, dt), true), from_cell}))});
    }

    Formula same_cell(std::size_t j, const Terms& t, const Terms& t2, const Terms& p) {
        std::vector<Formula> alts;
        for (const auto& T : L_.T[j]) alts.push_back(conj({at(T, cat(t, p)), at(T, cat(t2, p))}));
        return disj(std::move(alts));
    }

    Formula work_effect(std::size_t j, const Terms& t, const Terms& t2, char w, Move mv) {
        const SOVar& H = L_.H[j];
        Vars p = vars(k_, "p"), p2 = vars(k_, "p");
        Terms pt = var_terms(p), p2t = var_terms(p2);
        Formula written = w == kAny ? same_cell(j, t, t2, pt)
                                    : at(L_.T[j][L_.symbols.find(w)], cat(t2, pt));
        Formula moved;
        switch (mv) {
        case Move::Stay:
            moved = at(H, cat(t2, pt));
            break;
        case Move::Right:
            moved = Formula::exists(p2, conj({stdlib::succ_k(k_, pt, p2t), at(H, cat(t2, p2t))}));
            break;
        case Move::Left:
            moved = disj({conj({stdlib::is_zero_tuple(pt), at(H, cat(t2, pt))}),
                          Formula::exists(p2, conj({stdlib::succ_k(k_, p2t, pt), at(H, cat(t2, p2t))}))});
            break;
        }
        return forall(p, L_.I, disj({at(H, cat(t, pt), true), conj({written, moved})}));
    }

    Formula effect(const Action& a, const Terms& t, const Terms& t2) {
        std::vector<Formula> c{at(L_.S[static_cast<std::size_t>(a.next)], t2), address_write(t, t2, a.addr_write),
                               address_move(t, t2, a.addr_move)};
        for (std::size_t j = 0; j < L_.T.size(); ++j) c.push_back(work_effect(j, t, t2, a.work_write[j], a.work_move[j]));
        return conj(std::move(c));
    }

    Formula state_rules(int q, const Terms& t, const Terms& t2) {
        std::size_t qi = static_cast<std::size_t>(q);
        if (m_.is_final(q)) {
            Action stay;
            stay.next = q;
            stay.work_write.assign(static_cast<std::size_t>(m_.tapes), kAny);
            stay.work_move.assign(static_cast<std::size_t>(m_.tapes), Move::Stay);
            return disj({at(L_.S[qi], t, true), effect(stay, t, t2)});
        }
        bool key_in = false, key_addr = false;
        std::vector<bool> key_work(static_cast<std::size_t>(m_.tapes), false);
        for (const auto& l : m_.lines) {
            if (l.state != q) continue;
            key_in |= l.input != kAny;
            key_addr |= l.addr != kAny || l.action.addr_write != kAny;
            for (std::size_t j = 0; j < key_work.size(); ++j) key_work[j] = key_work[j] || l.work[j] != kAny;
        }
        std::string ins = key_in ? "01<" : "*", addrs = key_addr ? "01$" : "*";
        std::vector<std::string> works;
        std::uint64_t combos = ins.size() * addrs.size();
        for (bool kw : key_work) {
            works.push_back(kw ? L_.symbols : "*");
            combos *= works.back().size();
        }
        if (combos > 100000)
            throw CompileError("state " + m_.states[qi] + " needs " + std::to_string(combos) + " symbol combinations");

        std::vector<Formula> rules;
        std::vector<char> work(works.size());
        std::function<void(char, char, std::size_t)> each = [&](char in, char ad, std::size_t j) {
            if (j < works.size()) {
                for (char s : works[j]) {
                    work[j] = s;
                    each(in, ad, j + 1);
                }
                return;
            }
            auto acts = applicable_actions(m_, q, in, ad, work);
            if (acts.size() > 2)
                throw CompileError("state " + m_.states[qi] + " has " + std::to_string(acts.size()) +
                                   " applicable actions for one symbol combination");
            std::vector<Formula> clause{at(L_.S[qi], t, true)};
            if (in != kAny) clause.push_back(at(L_.L[in == '0' ? 0 : in == '1' ? 1 : 2], t, true));
            if (ad == '$') clause.push_back(at(L_.AB, t, true));
            else if (ad != kAny) clause.push_back(at(L_.RA[ad - '0'], t, true));
            for (std::size_t w = 0; w < work.size(); ++w)
                if (work[w] != kAny) clause.push_back(at(L_.RW[w][L_.symbols.find(work[w])], t, true));
            std::vector<Formula> outs;
            for (const Action* a : acts) {
                if (ad == '$' && a->addr_write != kAny)
                    outs.push_back(Formula::falsity());
                else
                    outs.push_back(effect(*a, t, t2));
            }
            if (outs.empty())
                clause.push_back(Formula::falsity());
            else if (outs.size() == 1)
                clause.push_back(outs[0]);
            else
                clause.push_back(disj({conj({at(L_.G, t, true), outs[0]}), conj({at(L_.G, t), outs[1]})}));
            rules.push_back(disj(std::move(clause)));
        };
        for (char in : ins)
            for (char ad : addrs) each(in, ad, 0);
        return conj(std::move(rules));
    }

    Formula steps() {
        Vars t = vars(k_, "t"), t2 = vars(k_, "t");
        Terms tt = var_terms(t), t2t = var_terms(t2);
        std::vector<Formula> step{stdlib::succ_k(k_, tt, t2t)};
        {
            Vars d = vars(ka_, "d");
            Terms dt = var_terms(d);
            std::string b = names_.fresh("b");
            step.push_back(forall(d, L_.Ip, disj({at(L_.AH, cat(tt, dt)),
                                                  Formula::exists(b, conj({at(L_.C, cat(cat(tt, dt), {Term::var(b)})),
                                                                           at(L_.C, cat(cat(t2t, dt), {Term::var(b)}))}))})));
        }
        for (std::size_t j = 0; j < L_.T.size(); ++j) {
            Vars p = vars(k_, "p");
            Terms pt = var_terms(p);
            step.push_back(forall(p, L_.I, disj({at(L_.H[j], cat(tt, pt)), same_cell(j, tt, t2t, pt)})));
        }
        for (std::size_t q = 0; q < m_.states.size(); ++q) step.push_back(state_rules(static_cast<int>(q), tt, t2t));
        return forall(t, L_.I, disj({stdlib::is_last_tuple(tt), Formula::exists(t2, conj(std::move(step)))}));
    }

    Formula sum(const SOVar& X, const SOVar& Y, const SOVar& Z, const SOVar& W) {
        return stdlib::bsum_open(ka_, NumRef(X), NumRef(Y), NumRef(Z), L_.Ip, NumRef(W), names_, parts());
    }

    static stdlib::BodyParts parts() { return {false, false, true, true}; }

    Formula numbers() {
        std::vector<Formula> c;
        c.push_back(stdlib::bin_with(ka_, NumRef(L_.M0), L_.Ip, names_));
        c.push_back(stdlib::bnum_open(ka_, NumRef(L_.M0), kOne, L_.Ip, names_));
        c.push_back(stdlib::bin_with(ka_, NumRef(L_.Mx), L_.Ip, names_));
        c.push_back(stdlib::bnum_open(ka_, NumRef(L_.Mx), Term::constant("MAX"), L_.Ip, names_));
        c.push_back(sum(L_.Mx, L_.M0, L_.M[1], L_.MxW));
        for (std::size_t i = 2; i < L_.M.size(); ++i) {
            stdlib::MultInternals in{L_.Ip, L_.Ipp, NumRef(L_.MR[i]), NumRef(L_.MS[i]), NumRef(L_.MW[i])};
            c.push_back(stdlib::bmult_open(ka_, NumRef(L_.M[1]), NumRef(L_.M[i - 1]), NumRef(L_.M[i]), in, names_, parts()));
        }
        c.push_back(stdlib::bin_with(ka_, NumRef(L_.P[0]), L_.Ip, names_));
        c.push_back(stdlib::bnum_open(ka_, NumRef(L_.P[0]), kZero, L_.Ip, names_));
        for (std::size_t i = 1; i < L_.P.size(); ++i) {
            int r = vocab_.relations()[i - 1].arity;
            c.push_back(sum(L_.P[i - 1], L_.M[static_cast<std::size_t>(r)], L_.P[i], L_.PW[i]));
        }
        std::size_t q = L_.cst.size();
        if (q > 0) {
            c.push_back(stdlib::bin_with(ka_, NumRef(L_.N[1]), L_.Ip, names_));
            c.push_back(stdlib::bnum_open(ka_, NumRef(L_.N[1]), Term::constant("LOGN"), L_.Ip, names_));
            for (std::size_t i = 2; i <= q; ++i) c.push_back(sum(L_.N[i - 1], L_.N[1], L_.N[i], L_.NW[i]));
            c.push_back(stdlib::bin_with(ka_, NumRef(L_.NL), L_.Ip, names_));
            c.push_back(stdlib::bnum_open(ka_, NumRef(L_.NL), Term::constant("LOGN_MINUS_1"), L_.Ip, names_));
            for (std::size_t j = 1; j < q; ++j) c.push_back(sum(L_.P.back(), L_.N[j], L_.E[j], L_.EW[j]));
            c.push_back(sum(L_.P.back(), L_.N[q], L_.Pend, L_.PendW));
        }
        return conj(std::move(c));
    }

    NumRef at_time(const SOVar& X, const Terms& t) { return NumRef(X, t); }

    Formula divide(const NumRef& X, const NumRef& Y, const DivVars& d, const Terms& t) {
        stdlib::DivInternals in;
        in.mult = {L_.Ip, L_.Ipp, at_time(d.R, t), at_time(d.S, t), at_time(d.W, t)};
        in.A = at_time(d.A, t);
        in.W2 = at_time(d.V, t);
        return stdlib::bdiv_open(ka_, X, Y, at_time(d.quot, t), at_time(d.rem, t), in, names_, parts());
    }

    // lo <= C_t < hi -> body
    Formula in_range(const NumRef& c, const SOVar& lo, const SOVar& hi, Formula body) {
        return disj({stdlib::lt_open(ka_, c, NumRef(lo), L_.Ip, names_), stdlib::le_open(ka_, NumRef(hi), c, L_.Ip, names_),
                     std::move(body)});
    }

    Formula read_bit(const Terms& t, Formula one, Formula zero) {
        return disj({conj({at(L_.L[1], t), std::move(one)}), conj({at(L_.L[0], t), std::move(zero)})});
    }

    Formula input_link() {
        Vars t = vars(k_, "t");
        Terms tt = var_terms(t);
        NumRef ct(L_.C, tt);
        std::vector<Formula> c{disj({stdlib::lt_open(ka_, ct, NumRef(L_.Pend), L_.Ip, names_), at(L_.L[2], tt)})};
        for (std::size_t i = 0; i < L_.rel.size(); ++i) {
            const RelVars& rv = L_.rel[i];
            const auto& sym = vocab_.relations()[i];
            int r = sym.arity;
            NumRef D = at_time(rv.D, tt);
            std::vector<Formula> body{
                stdlib::bsum_open(ka_, NumRef(L_.P[i]), D, ct, L_.Ip, at_time(rv.DW, tt), names_, parts())};
            for (int j = 1; j <= r; ++j) {
                const DivVars& outer = rv.outer[static_cast<std::size_t>(j - 1)];
                const DivVars& inner = rv.inner[static_cast<std::size_t>(j - 1)];
                body.push_back(divide(D, NumRef(L_.M[static_cast<std::size_t>(r - j)]), outer, tt));
                body.push_back(divide(at_time(outer.quot, tt), NumRef(L_.M[1]), inner, tt));
            }
            Vars x = vars(r, "x");
            Formula tail = read_bit(tt, Formula::rel_atom(sym.name, var_terms(x)),
                                    Formula::rel_atom(sym.name, var_terms(x), true));
            for (int j = r; j >= 1; --j) {
                const DivVars& inner = rv.inner[static_cast<std::size_t>(j - 1)];
                std::string xj = x[static_cast<std::size_t>(j - 1)];
                tail = Formula::exists(xj, conj({stdlib::bnum_open(ka_, at_time(inner.rem, tt), Term::var(xj), L_.Ip, names_),
                                                 tail}));
            }
            body.push_back(tail);
            c.push_back(in_range(ct, L_.P[i], L_.P[i + 1], conj(std::move(body))));
        }
        std::size_t q = L_.cst.size();
        for (std::size_t j = 0; j < q; ++j) {
            const ConstVars& cv = L_.cst[j];
            const SOVar& lo = j == 0 ? L_.P.back() : L_.E[j];
            const SOVar& hi = j + 1 == q ? L_.Pend : L_.E[j + 1];
            NumRef O = at_time(cv.O, tt), Y = at_time(cv.Y, tt);
            std::string y = names_.fresh("y");
            Term cj = Term::constant(vocab_.constants()[j]);
            Formula body = conj({stdlib::bsum_open(ka_, NumRef(lo), O, ct, L_.Ip, at_time(cv.OW, tt), names_, parts()),
                                 stdlib::bsum_open(ka_, O, Y, NumRef(L_.NL), L_.Ip, at_time(cv.YW, tt), names_, parts()),
                                 Formula::exists(y, conj({stdlib::bnum_open(ka_, Y, Term::var(y), L_.Ip, names_),
                                                          read_bit(tt, Formula::rel_atom("BIT", {cj, Term::var(y)}),
                                                                   Formula::rel_atom("BIT", {cj, Term::var(y)}, true))}))});
            c.push_back(in_range(ct, lo, hi, std::move(body)));
        }
        return forall(t, L_.I, conj(std::move(c)));
    }

    const MachineDesc& m_;
    const Vocabulary& vocab_;
    const Layout& L_;
    int k_, ka_;
    NameSupply names_{"_f"};
};

// ---------------------------------------------------------------------------
// Witness construction

class WitnessBuilder {
public:
    WitnessBuilder(const Layout& L, std::size_t n) : L_(L), n_(n), ck_{n, L.k}, ca_{n, L.ka} {}

    void add(const SOVar& v, Tuple t) { vals_[v.name].push_back(std::move(t)); }
    void add_all(const SOVar& v, const std::vector<Tuple>& ts) {
        auto& dst = vals_[v.name];
        dst.insert(dst.end(), ts.begin(), ts.end());
    }
    void number(const SOVar& v, std::uint64_t x, const Tuple& pre = {}) { add_all(v, ca_.encode_tuples(x, pre)); }
    void carries(const SOVar& v, std::uint64_t x, std::uint64_t y, const Tuple& pre = {}) {
        add_all(v, stdlib::sum_carries(ca_, x, y, pre));
    }
    void mult(const SOVar& R, const SOVar& S, const SOVar& W, std::uint64_t x, std::uint64_t y, const Tuple& pre = {}) {
        auto w = stdlib::mult_witness(ca_, x, y, pre);
        add_all(R, w.R);
        add_all(S, w.S);
        add_all(W, w.W);
    }
    // BDIV(x, y, x div y, x mod y)
    void divide(const DivVars& d, std::uint64_t x, std::uint64_t y, const Tuple& pre) {
        std::uint64_t q = x / y, r = x % y;
        number(d.quot, q, pre);
        number(d.rem, r, pre);
        mult(d.R, d.S, d.W, q, y, pre);
        number(d.A, q * y, pre);
        carries(d.V, q * y, r, pre);
    }

    Witness finish() const {
        Witness w;
        for (const auto& e : L_.roster) {
            auto it = vals_.find(e.var.name);
            WitnessEntry out{e.var.name, {}};
            if (it != vals_.end()) {
                std::set<Tuple> uniq(it->second.begin(), it->second.end());
                out.tuples.assign(uniq.begin(), uniq.end());
            }
            w.push_back(std::move(out));
        }
        return w;
    }

    const stdlib::Codec& time_codec() const { return ck_; }
    const stdlib::Codec& addr_codec() const { return ca_; }

private:
    const Layout& L_;
    std::size_t n_;
    stdlib::Codec ck_, ca_;
    std::map<std::string, std::vector<Tuple>> vals_;
};

Tuple join(Tuple a, const Tuple& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

struct Sizes {
    std::uint64_t logn, times, positions, length, addr_len;
};

Sizes sizes(const CompiledMachine& c, std::size_t n) {
    Sizes s;
    s.logn = log_ceil(n);
    s.times = sat_pow(s.logn, static_cast<std::uint64_t>(c.plan.k));
    s.positions = sat_pow(s.logn, static_cast<std::uint64_t>(c.plan.k_addr));
    s.length = encoded_length(c.vocab, n);
    s.addr_len = address_length(s.length);
    return s;
}

} // namespace

// ---------------------------------------------------------------------------

CompiledMachine compile_machine(const MachineDesc& m, const Vocabulary& vocab, const CompileOptions& opts) {
    m.check();
    if (opts.k < 1 || opts.k_addr < 1) throw CompileError("k and k' must be at least 1");
    for (std::size_t q = 0; q < m.states.size(); ++q)
        if (m.modes[q] == Mode::Universal && !opts.universal)
            throw CompileError("state " + m.states[q] + " is universal; only existential machines compile to Sigma 1");
    if (vocab.relations().empty() && vocab.constants().empty())
        throw CompileError("the vocabulary has neither relations nor constants, so bin(A) is empty");
    CompiledMachine out;
    out.vocab = vocab;
    out.machine = binarize(m, &out.plan.split_depth);
    for (const auto& l : out.machine.lines)
        if (l.action.addr_write != kAny && l.action.addr_write != '0' && l.action.addr_write != '1')
            throw CompileError(std::string("address tape write '") + l.action.addr_write + "' is not a bit");
    Layout L = make_layout(out.machine, vocab, opts.k, opts.k_addr);
    std::set<std::string> seen;
    for (const auto& e : L.roster) {
        if (vocab.has_symbol(e.var.name))
            throw CompileError("vocabulary symbol " + e.var.name + " clashes with a generated relation variable");
        if (!seen.insert(e.var.name).second) throw CompileError("duplicate generated variable " + e.var.name);
    }
    out.plan.k = opts.k;
    out.plan.k_addr = opts.k_addr;
    out.plan.universal = opts.universal;
    out.plan.symbols = L.symbols;
    out.plan.roster = L.roster;

    Formula body = Compiler(out.machine, vocab, L).build();
    for (auto it = L.roster.rbegin(); it != L.roster.rend(); ++it)
        body = opts.universal ? Formula::forall_so(it->var, std::move(body)) : Formula::exists_so(it->var, std::move(body));
    validate(body, &vocab);
    out.sentence = to_qnf(body);
    return out;
}

std::string format_metadata(const CompiledMachine& c) {
    std::ostringstream os;
    os << "format = soplog-fagin 1\n";
    os << "k = " << c.plan.k << "\n";
    os << "k_addr = " << c.plan.k_addr << "\n";
    os << "quantifier = " << (c.plan.universal ? "forall" : "exists") << "\n";
    os << "budget = ceil(log n)^" << c.plan.k << " - 1 steps\n";
    os << "requires = 2^(ceil(log n)^" << c.plan.k_addr << ") > max(2^address_length(|bin(A)|) - 1, n^rmax)\n";
    os << "split_depth = " << c.plan.split_depth << "\n";
    os << "states = " << c.machine.states.size() << "\n";
    os << "symbols = " << c.plan.symbols << "\n";
    os << "variables = " << c.plan.roster.size() << "\n";
    for (const auto& e : c.plan.roster)
        os << "var " << e.var.name << " " << e.var.arity << " " << e.var.exponent << " " << e.role << "\n";
    return os.str();
}

std::uint64_t step_budget(const CompiledMachine& c, std::size_t n) {
    std::uint64_t t = sat_pow(log_ceil(n), static_cast<std::uint64_t>(c.plan.k));
    return t == 0 ? 0 : t - 1;
}

void check_parameters(const CompiledMachine& c, std::size_t n) {
    if (n < 2) throw CompileError("the construction needs at least two domain elements");
    Sizes s = sizes(c, n);
    if (s.positions > 63)
        throw CompileError("address numbers with " + std::to_string(s.positions) + " bits exceed the 63-bit codec");
    int rmax = 1;
    for (const auto& r : c.vocab.relations()) rmax = std::max(rmax, r.arity);
    std::uint64_t need = std::max((std::uint64_t{1} << std::min<std::uint64_t>(s.addr_len, 63)) - 1,
                                  sat_pow(n, static_cast<std::uint64_t>(rmax)));
    if (s.addr_len > 63 || need > (std::uint64_t{1} << s.positions) - 1)
        throw CompileError("k' = " + std::to_string(c.plan.k_addr) + " is too small at n = " + std::to_string(n) + ": " +
                           std::to_string(s.positions) + " bits cannot hold " + std::to_string(need));
    if (s.times > 4096)
        throw CompileError("k = " + std::to_string(c.plan.k) + " gives " + std::to_string(s.times) +
                           " time steps at n = " + std::to_string(n) + ", too many to build witnesses");
}

std::vector<MachinePath> enumerate_paths(const MachineDesc& m, const BitString& input, std::uint64_t max_steps,
                                         std::size_t limit) {
    std::vector<MachinePath> out;
    MachinePath cur;
    cur.configs.push_back(initial_config(m, input));
    std::function<void()> walk = [&] {
        std::vector<MachineConfig> next;
        if (cur.choices.size() < max_steps) next = successors(m, input, cur.configs.back());
        if (next.empty()) {
            if (out.size() >= limit) throw MachineError("more than " + std::to_string(limit) + " computation paths");
            out.push_back(cur);
            return;
        }
        for (std::size_t i = 0; i < next.size(); ++i) {
            cur.configs.push_back(next[i]);
            cur.choices.push_back(static_cast<int>(i));
            walk();
            cur.configs.pop_back();
            cur.choices.pop_back();
        }
    };
    walk();
    return out;
}

Witness witness_from_path(const CompiledMachine& c, const Structure& a, const MachinePath& path) {
    std::size_t n = a.size();
    check_parameters(c, n);
    Sizes sz = sizes(c, n);
    if (path.configs.empty() || path.configs.size() > sz.times)
        throw CompileError("a path of " + std::to_string(path.configs.size()) + " configurations does not fit " +
                           std::to_string(sz.times) + " time points");
    const MachineDesc& m = c.machine;
    Layout L = make_layout(m, c.vocab, c.plan.k, c.plan.k_addr);
    WitnessBuilder w(L, n);
    const auto& ck = w.time_codec();
    const auto& ca = w.addr_codec();
    std::uint64_t la = sz.addr_len;

    w.add_all(L.I, ck.index_set().tuples());
    w.add_all(L.Ip, ca.index_set().tuples());
    w.add_all(L.Ipp, stdlib::Codec{n, 2 * c.plan.k_addr}.index_set().tuples());

    for (std::uint64_t t = 0; t < sz.times; ++t) {
        const MachineConfig& cfg = path.configs[std::min<std::size_t>(t, path.configs.size() - 1)];
        Tuple tt = ck.position(t);
        w.add(L.S[static_cast<std::size_t>(cfg.state)], tt);
        for (std::size_t j = 0; j < L.T.size(); ++j) {
            const std::string& tape = cfg.work[j];
            if (cfg.heads[j] >= sz.times) throw CompileError("work head beyond the representable positions");
            for (std::uint64_t p = 0; p < sz.times; ++p) {
                char s = p < tape.size() ? tape[p] : kBlank;
                w.add(L.T[j][L.symbols.find(s)], join(tt, ck.position(p)));
            }
            w.add(L.H[j], join(tt, ck.position(cfg.heads[j])));
            char under = cfg.heads[j] < tape.size() ? tape[cfg.heads[j]] : kBlank;
            w.add(L.RW[j][L.symbols.find(under)], tt);
        }
        w.add(L.L[cfg.input == '0' ? 0 : cfg.input == '1' ? 1 : 2], tt);
        std::uint64_t value = 0;
        for (char b : cfg.addr) value = value * 2 + (b == '1');
        w.number(L.C, value, tt);
        if (cfg.addr_head >= cfg.addr.size()) {
            w.add(L.AB, tt);
        } else {
            w.add(L.AH, join(tt, ca.position(la - 1 - cfg.addr_head)));
            w.add(L.RA[cfg.addr[cfg.addr_head] == '1' ? 1 : 0], tt);
        }
        if (t < path.choices.size() && path.choices[t] == 1) w.add(L.G, tt);

        std::uint64_t lo = 0;
        const auto& rels = c.vocab.relations();
        for (std::size_t i = 0; i < rels.size(); ++i) {
            std::uint64_t hi = lo + sat_pow(n, static_cast<std::uint64_t>(rels[i].arity));
            if (value >= lo && value < hi) {
                std::uint64_t d = value - lo;
                const RelVars& rv = L.rel[i];
                w.number(rv.D, d, tt);
                w.carries(rv.DW, lo, d, tt);
                int r = rels[i].arity;
                for (int j = 1; j <= r; ++j) {
                    std::uint64_t y = sat_pow(n, static_cast<std::uint64_t>(r - j));
                    w.divide(rv.outer[static_cast<std::size_t>(j - 1)], d, y, tt);
                    w.divide(rv.inner[static_cast<std::size_t>(j - 1)], d / y, n, tt);
                }
            }
            lo = hi;
        }
        for (std::size_t j = 0; j < L.cst.size(); ++j) {
            std::uint64_t clo = lo + j * sz.logn;
            if (value >= clo && value < clo + sz.logn) {
                std::uint64_t o = value - clo;
                w.number(L.cst[j].O, o, tt);
                w.carries(L.cst[j].OW, clo, o, tt);
                w.number(L.cst[j].Y, sz.logn - 1 - o, tt);
                w.carries(L.cst[j].YW, o, sz.logn - 1 - o, tt);
            }
        }
    }
    w.add(L.F, ca.position(la - 1));

    w.number(L.M0, 1);
    w.number(L.Mx, n - 1);
    w.carries(L.MxW, n - 1, 1);
    w.number(L.M[1], n);
    for (std::size_t i = 2; i < L.M.size(); ++i) {
        w.number(L.M[i], sat_pow(n, i));
        w.mult(L.MR[i], L.MS[i], L.MW[i], n, sat_pow(n, i - 1));
    }
    std::uint64_t pos = 0;
    w.number(L.P[0], 0);
    for (std::size_t i = 1; i < L.P.size(); ++i) {
        std::uint64_t len = sat_pow(n, static_cast<std::uint64_t>(c.vocab.relations()[i - 1].arity));
        w.carries(L.PW[i], pos, len);
        pos += len;
        w.number(L.P[i], pos);
    }
    std::size_t q = L.cst.size();
    if (q > 0) {
        w.number(L.N[1], sz.logn);
        for (std::size_t i = 2; i <= q; ++i) {
            w.number(L.N[i], i * sz.logn);
            w.carries(L.NW[i], (i - 1) * sz.logn, sz.logn);
        }
        w.number(L.NL, sz.logn - 1);
        for (std::size_t j = 1; j < q; ++j) {
            w.number(L.E[j], pos + j * sz.logn);
            w.carries(L.EW[j], pos, j * sz.logn);
        }
        w.number(L.Pend, pos + q * sz.logn);
        w.carries(L.PendW, pos, q * sz.logn);
    }
    return w.finish();
}

std::optional<Witness> extract_witness(const CompiledMachine& c, const Structure& a) {
    if (c.plan.universal) throw CompileError("witnesses exist only for existential compilations");
    check_parameters(c, a.size());
    BitString input = encode(a);
    std::uint64_t budget = step_budget(c, a.size());
    const MachineDesc& m = c.machine;
    MachinePath cur;
    cur.configs.push_back(initial_config(m, input));
    std::function<bool()> search = [&]() -> bool {
        const MachineConfig& here = cur.configs.back();
        if (m.is_final(here.state)) return m.accepting[static_cast<std::size_t>(here.state)];
        if (cur.choices.size() >= budget) return false;
        auto next = successors(m, input, here);
        for (std::size_t i = 0; i < next.size(); ++i) {
            cur.configs.push_back(next[i]);
            cur.choices.push_back(static_cast<int>(i));
            if (search()) return true;
            cur.configs.pop_back();
            cur.choices.pop_back();
        }
        return false;
    };
    if (!search()) return std::nullopt;
    return witness_from_path(c, a, cur);
}

bool SoundnessReport::agrees() const {
    if (machine_accepts()) return witness_found && witness_checks;
    return !witness_found && refuted();
}

SoundnessReport check_soundness(const CompiledMachine& c, const Structure& a, const EvalOptions& opts) {
    if (c.plan.universal) throw CompileError("soundness checks need an existential compilation");
    check_parameters(c, a.size());
    SoundnessReport rep;
    BitString input = encode(a);
    RunConfig rc;
    rc.step_budget = step_budget(c, a.size());
    rep.machine = run(c.machine, input, rc).outcome;
    auto w = extract_witness(c, a);
    rep.witness_found = w.has_value();
    if (w) rep.witness_checks = evaluate_with_witness(a, c.sentence, *w, {}, opts);
    if (!rep.machine_accepts()) {
        for (const auto& path : enumerate_paths(c.machine, input, *rc.step_budget)) {
            const MachineConfig& last = path.configs.back();
            if (c.machine.is_final(last.state) && c.machine.accepting[static_cast<std::size_t>(last.state)])
                rep.accepting_path = true;
            ++rep.paths_checked;
            if (evaluate_with_witness(a, c.sentence, witness_from_path(c, a, path), {}, opts)) ++rep.paths_satisfying;
        }
    }
    return rep;
}

std::string format_report(const SoundnessReport& r) {
    std::ostringstream os;
    os << "machine: " << to_string(r.machine) << "\n";
    os << "witness_found: " << (r.witness_found ? "true" : "false") << "\n";
    os << "witness_checks: " << (r.witness_checks ? "true" : "false") << "\n";
    if (!r.machine_accepts()) {
        os << "refutation_paths: " << r.paths_checked << "\n";
        os << "refutation_satisfying: " << r.paths_satisfying << "\n";
        os << "refuted: " << (r.refuted() ? "true" : "false") << "\n";
    }
    os << "agrees: " << (r.agrees() ? "true" : "false") << "\n";
    return os.str();
}

} // namespace soplog::fagin

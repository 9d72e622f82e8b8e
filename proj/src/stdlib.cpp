#include "soplog/stdlib.hpp"

#include "soplog/error.hpp"

#include <algorithm>
#include <cctype>

namespace soplog::stdlib {

namespace {

const Term kZero = Term::constant("ZERO");
const Term kOne = Term::constant("ONE");
const Term kLogn = Term::constant("LOGN");
const Term kLast = Term::constant("LOGN_MINUS_1");

Formula rel(const char* r, Term a, Term b, bool neg = false) { return Formula::rel_atom(r, {std::move(a), std::move(b)}, neg); }
Formula eq(Term a, Term b) { return Formula::equal(std::move(a), std::move(b)); }
Formula neq(Term a, Term b) { return Formula::equal(std::move(a), std::move(b), true); }
Formula lt(Term a, Term b) { return Formula::conj({rel("LEQ", a, b), neq(a, b)}); }

std::vector<std::string> fresh_vars(NameSupply& names, int k, const std::string& hint) {
    std::vector<std::string> out;
    for (int i = 0; i < k; ++i) out.push_back(names.fresh(hint));
    return out;
}

std::vector<Term> cat(std::vector<Term> a, const std::vector<Term>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<Term> repeat(const Term& t, int k) { return std::vector<Term>(static_cast<std::size_t>(k), t); }

void require(bool ok, const std::string& msg) {
    if (!ok) throw FormulaError(msg);
}

void require_index(int k, const SOVar& I) {
    require(I.arity == k && I.exponent == k,
            "index variable " + format_sovar(I) + " must have arity and exponent " + std::to_string(k));
}

void require_num(int k, const NumRef& X) {
    require(X.width() == k, "number variable " + format_sovar(X.var) + " sliced by " + std::to_string(X.prefix.size()) +
                                " terms does not have width " + std::to_string(k));
}

void require_closed_num(int k, const SOVar& X) {
    require(X.arity == k + 1 && X.exponent == k,
            "number variable " + format_sovar(X) + " must have arity " + std::to_string(k + 1) + " and exponent " +
                std::to_string(k));
}

SOVar index_var(int k, NameSupply& names) { return SOVar{names.fresh("I"), k, k}; }

NumRef slice(const NumRef& r, const std::vector<Term>& at) { return NumRef(r.var, cat(r.prefix, at)); }

} // namespace

Formula NumRef::at(const std::vector<Term>& pos, const Term& bit, bool negated) const {
    std::vector<Term> ts = prefix;
    ts.insert(ts.end(), pos.begin(), pos.end());
    ts.push_back(bit);
    return Formula::so_atom(var, std::move(ts), negated);
}

// ---------------------------------------------------------------------------
// Tuple order and successor over B^k

Formula leq_k(int k, const std::vector<Term>& x, const std::vector<Term>& y) {
    require(k >= 1 && static_cast<int>(x.size()) == k && static_cast<int>(y.size()) == k, "leq_k: bad tuple widths");
    if (k == 1) return rel("LEQ", x[0], y[0]);
    std::vector<Term> xr(x.begin() + 1, x.end()), yr(y.begin() + 1, y.end());
    return Formula::disj({lt(x[0], y[0]), Formula::conj({eq(x[0], y[0]), leq_k(k - 1, xr, yr)})});
}

Formula succ_k(int k, const std::vector<Term>& x, const std::vector<Term>& y) {
    require(k >= 1 && static_cast<int>(x.size()) == k && static_cast<int>(y.size()) == k, "succ_k: bad tuple widths");
    Formula bounded = Formula::conj({rel("LEQ", y[0], kLogn), neq(y[0], kLogn)});
    if (k == 1) return Formula::conj({bounded, rel("SUCC", x[0], y[0])});
    std::vector<Term> xr(x.begin() + 1, x.end()), yr(y.begin() + 1, y.end());
    std::vector<Formula> roll{rel("SUCC", x[0], y[0])};
    for (int i = 1; i < k; ++i) roll.push_back(rel("SUCC", x[i], kLogn));
    for (int i = 1; i < k; ++i) roll.push_back(eq(y[i], kZero));
    return Formula::conj({bounded, Formula::disj({Formula::conj({eq(y[0], x[0]), succ_k(k - 1, xr, yr)}),
                                                  Formula::conj(std::move(roll))})});
}

Formula is_zero_tuple(const std::vector<Term>& x) {
    std::vector<Formula> parts;
    for (const auto& t : x) parts.push_back(eq(t, kZero));
    return Formula::conj(std::move(parts));
}

Formula is_last_tuple(const std::vector<Term>& x) {
    std::vector<Formula> parts;
    for (const auto& t : x) parts.push_back(eq(t, kLast));
    return Formula::conj(std::move(parts));
}

Formula tuple_eq(const std::vector<Term>& x, const std::vector<Term>& y) {
    std::vector<Formula> parts;
    for (std::size_t i = 0; i < x.size(); ++i) parts.push_back(eq(x[i], y[i]));
    return Formula::conj(std::move(parts));
}

Formula def_k(int k, const SOVar& I, NameSupply& names) {
    require(k >= 1, "DEF_k needs k >= 1");
    require_index(k, I);
    auto x = var_terms(fresh_vars(names, k, "x"));
    auto yv = fresh_vars(names, k, "y");
    auto y = var_terms(yv);
    auto zv = fresh_vars(names, k, "z");
    auto z = var_terms(zv);
    std::vector<Formula> at_end;
    for (const auto& t : y) at_end.push_back(rel("SUCC", t, kLogn));
    Formula has_zero = Formula::exists(
        [&] {
            std::vector<std::string> v;
            for (const auto& t : x) v.push_back(t.name);
            return v;
        }(),
        Formula::conj({is_zero_tuple(x), Formula::so_atom(I, x)}));
    Formula closed =
        Formula::forall_in(yv, I,
                           Formula::disj({Formula::conj(std::move(at_end)),
                                          Formula::exists(zv, Formula::conj({succ_k(k, y, z), Formula::so_atom(I, z)}))}));
    return Formula::conj({has_zero, closed});
}

// ---------------------------------------------------------------------------
// Numbers

Formula bin_with(int k, const NumRef& X, const SOVar& I, NameSupply& names) {
    require_num(k, X);
    require_index(k, I);
    auto xv = fresh_vars(names, k, "x");
    auto x = var_terms(xv);
    return Formula::forall_in(xv, I, Formula::disj({X.at(x, kZero), X.at(x, kOne)}));
}

Formula bin_k(int k, const SOVar& X, NameSupply& names) {
    require_closed_num(k, X);
    SOVar I = index_var(k, names);
    return Formula::exists_so(I, Formula::conj({def_k(k, I, names), bin_with(k, NumRef(X), I, names)}));
}

Formula eq_open(int k, const NumRef& X, const NumRef& Y, const SOVar& I, NameSupply& names) {
    require_num(k, X);
    require_num(k, Y);
    require_index(k, I);
    auto xv = fresh_vars(names, k, "x");
    auto x = var_terms(xv);
    std::string z = names.fresh("b");
    return Formula::forall_in(xv, I, Formula::exists(z, Formula::conj({X.at(x, Term::var(z)), Y.at(x, Term::var(z))})));
}

Formula lt_open(int k, const NumRef& X, const NumRef& Y, const SOVar& I, NameSupply& names) {
    require_num(k, X);
    require_num(k, Y);
    require_index(k, I);
    auto xv = fresh_vars(names, k, "x");
    auto x = var_terms(xv);
    auto yv = fresh_vars(names, k, "y");
    auto y = var_terms(yv);
    std::string z = names.fresh("b");
    Formula higher_agree = Formula::forall_in(
        yv, I,
        Formula::disj({leq_k(k, y, x), Formula::exists(z, Formula::conj({X.at(y, Term::var(z)), Y.at(y, Term::var(z))}))}));
    return Formula::exists(xv, Formula::conj({Formula::so_atom(I, x), X.at(x, kZero), Y.at(x, kOne), higher_agree}));
}

Formula le_open(int k, const NumRef& X, const NumRef& Y, const SOVar& I, NameSupply& names) {
    return Formula::disj({lt_open(k, X, Y, I, names), eq_open(k, X, Y, I, names)});
}

namespace {

enum class Cmp { Eq, Lt, Le };

Formula compare_closed(int k, const SOVar& X, const SOVar& Y, Cmp c, NameSupply& names) {
    require_closed_num(k, X);
    require_closed_num(k, Y);
    SOVar I = index_var(k, names);
    NumRef x(X), y(Y);
    Formula body = c == Cmp::Eq ? eq_open(k, x, y, I, names)
                 : c == Cmp::Lt ? lt_open(k, x, y, I, names)
                                : le_open(k, x, y, I, names);
    return Formula::exists_so(I, Formula::conj({def_k(k, I, names), bin_with(k, x, I, names),
                                                bin_with(k, y, I, names), body}));
}

} // namespace

Formula eq_num(int k, const SOVar& X, const SOVar& Y, NameSupply& names) { return compare_closed(k, X, Y, Cmp::Eq, names); }
Formula lt_num(int k, const SOVar& X, const SOVar& Y, NameSupply& names) { return compare_closed(k, X, Y, Cmp::Lt, names); }
Formula le_num(int k, const SOVar& X, const SOVar& Y, NameSupply& names) { return compare_closed(k, X, Y, Cmp::Le, names); }

Formula bnum_open(int k, const NumRef& X, const Term& x, const SOVar& I, NameSupply& names) {
    require_num(k, X);
    require_index(k, I);
    auto yv = fresh_vars(names, k, "y");
    auto y = var_terms(yv);
    std::vector<Term> lead(y.begin(), y.end() - 1);
    const Term& low = y.back();
    Formula iff = Formula::disj({Formula::conj({X.at(y, kOne), rel("BIT", x, low)}),
                                 Formula::conj({X.at(y, kOne, true), rel("BIT", x, low, true)})});
    if (lead.empty()) return Formula::forall_in(yv, I, iff);
    std::vector<Formula> lead_nonzero;
    for (const auto& t : lead) lead_nonzero.push_back(neq(t, kZero));
    return Formula::forall_in(
        yv, I,
        Formula::disj({Formula::conj({is_zero_tuple(lead), iff}),
                       Formula::conj({Formula::disj(std::move(lead_nonzero)), X.at(y, kZero)})}));
}

Formula bnum_k(int k, const SOVar& X, const Term& x, NameSupply& names) {
    require_closed_num(k, X);
    SOVar I = index_var(k, names);
    return Formula::exists_so(
        I, Formula::conj({def_k(k, I, names), bin_with(k, NumRef(X), I, names), bnum_open(k, NumRef(X), x, I, names)}));
}

// ---------------------------------------------------------------------------
// Addition

namespace {

// phi: least significant bit of Z matches X + Y at position 0̄.
Formula sum_phi(int k, const NumRef& X, const NumRef& Y, const NumRef& Z) {
    auto o = repeat(kZero, k);
    return Formula::disj(
        {Formula::conj({Z.at(o, kZero), Formula::disj({Formula::conj({X.at(o, kZero), Y.at(o, kZero)}),
                                                       Formula::conj({X.at(o, kOne), Y.at(o, kOne)})})}),
         Formula::conj({Z.at(o, kOne), Formula::disj({Formula::conj({X.at(o, kOne), Y.at(o, kZero)}),
                                                      Formula::conj({X.at(o, kZero), Y.at(o, kOne)})})})});
}

Formula bits3(const NumRef& A, const NumRef& B, const NumRef& C, const std::vector<Term>& p, int a, int b, int c) {
    auto bit = [](int v) { return v ? kOne : kZero; };
    return Formula::conj({A.at(p, bit(a)), B.at(p, bit(b)), C.at(p, bit(c))});
}

// psi: carry W at x̄ matches the column sum at ȳ = pred(x̄).
Formula sum_psi(const std::vector<Term>& x, const std::vector<Term>& y, const NumRef& W, const NumRef& X,
                const NumRef& Y) {
    return Formula::disj(
        {Formula::conj({W.at(x, kZero), Formula::disj({bits3(W, X, Y, y, 0, 0, 0), bits3(W, X, Y, y, 0, 0, 1),
                                                       bits3(W, X, Y, y, 0, 1, 0), bits3(W, X, Y, y, 1, 0, 0)})}),
         Formula::conj({W.at(x, kOne), Formula::disj({bits3(W, X, Y, y, 1, 1, 0), bits3(W, X, Y, y, 1, 0, 1),
                                                      bits3(W, X, Y, y, 0, 1, 1), bits3(W, X, Y, y, 1, 1, 1)})})});
}

// alpha: bit of Z at x̄ is the parity of W, X, Y at x̄.
Formula sum_alpha(const std::vector<Term>& x, const NumRef& W, const NumRef& X, const NumRef& Y, const NumRef& Z) {
    return Formula::disj(
        {Formula::conj({Z.at(x, kZero), Formula::disj({bits3(W, X, Y, x, 0, 0, 0), bits3(W, X, Y, x, 0, 1, 1),
                                                       bits3(W, X, Y, x, 1, 1, 0), bits3(W, X, Y, x, 1, 0, 1)})}),
         Formula::conj({Z.at(x, kOne), Formula::disj({bits3(W, X, Y, x, 0, 0, 1), bits3(W, X, Y, x, 0, 1, 0),
                                                      bits3(W, X, Y, x, 1, 0, 0), bits3(W, X, Y, x, 1, 1, 1)})})});
}

} // namespace

Formula bsum_open(int k, const NumRef& X, const NumRef& Y, const NumRef& Z, const SOVar& I, const NumRef& W,
                  NameSupply& names, BodyParts parts) {
    require(k >= 1, "BSUM_k needs k >= 1");
    require_num(k, X);
    require_num(k, Y);
    require_num(k, Z);
    require_num(k, W);
    require_index(k, I);
    std::vector<Formula> c;
    if (parts.def) c.push_back(def_k(k, I, names));
    if (parts.operand_bin) {
        c.push_back(bin_with(k, X, I, names));
        c.push_back(bin_with(k, Y, I, names));
        c.push_back(bin_with(k, Z, I, names));
    }
    if (parts.internal_bin) c.push_back(bin_with(k, W, I, names));
    c.push_back(W.at(repeat(kZero, k), kZero));
    c.push_back(le_open(k, X, Z, I, names));
    c.push_back(le_open(k, Y, Z, I, names));
    auto xv = fresh_vars(names, k, "x");
    auto x = var_terms(xv);
    auto yv = fresh_vars(names, k, "y");
    auto y = var_terms(yv);
    c.push_back(Formula::forall_in(
        xv, I,
        Formula::disj({Formula::conj({is_zero_tuple(x), sum_phi(k, X, Y, Z)}),
                       Formula::conj({Formula::exists(yv, Formula::conj({succ_k(k, y, x), sum_psi(x, y, W, X, Y)})),
                                      sum_alpha(x, W, X, Y, Z)})})));
    return Formula::conj(std::move(c));
}

Formula bsum_k(int k, const SOVar& X, const SOVar& Y, const SOVar& Z, NameSupply& names) {
    require_closed_num(k, X);
    require_closed_num(k, Y);
    require_closed_num(k, Z);
    SOVar I = index_var(k, names);
    SOVar W{names.fresh("W"), k + 1, k};
    Formula body = bsum_open(k, NumRef(X), NumRef(Y), NumRef(Z), I, NumRef(W), names);
    return Formula::exists_so(I, Formula::exists_so(W, body));
}

// ---------------------------------------------------------------------------
// Multiplication and division

Formula shift(int k, const NumRef& S, const NumRef& X, const SOVar& I, NameSupply& names) {
    require(S.width() == 2 * k, "SHIFT: S must have width 2k");
    require_num(k, X);
    require_index(k, I);
    auto xv = fresh_vars(names, k, "x");
    auto x = var_terms(xv);
    auto yv = fresh_vars(names, k, "y");
    auto y = var_terms(yv);
    auto zv = fresh_vars(names, k, "z");
    auto z = var_terms(zv);
    auto zpv = fresh_vars(names, k, "w");
    auto zp = var_terms(zpv);
    std::string b = names.fresh("b");
    NumRef Sx = slice(S, x), Sy = slice(S, y);
    std::vector<std::string> zb = zpv;
    zb.push_back(b);
    Formula shifted_in = Formula::forall_in(
        zv, I,
        Formula::disj({Formula::conj({is_zero_tuple(z), Sx.at(z, kZero)}),
                       Formula::exists(zb, Formula::conj({succ_k(k, zp, z), Sy.at(zp, Term::var(b)),
                                                          Sx.at(z, Term::var(b))}))}));
    return Formula::forall_in(
        xv, I,
        Formula::disj({Formula::conj({is_zero_tuple(x), eq_open(k, Sx, X, I, names)}),
                       Formula::exists(yv, Formula::conj({succ_k(k, y, x), shifted_in}))}));
}

Formula bmult_open(int k, const NumRef& X, const NumRef& Y, const NumRef& Z, const MultInternals& in,
                   NameSupply& names, BodyParts parts) {
    require(k >= 1, "BMULT_k needs k >= 1");
    require_num(k, X);
    require_num(k, Y);
    require_num(k, Z);
    require_index(k, in.I);
    require_index(2 * k, in.I2);
    require(in.R.width() == 2 * k && in.S.width() == 2 * k && in.W.width() == 2 * k,
            "BMULT: R, S, W must have width 2k");
    const SOVar& I = in.I;
    std::vector<Formula> c;
    if (parts.def) c.push_back(def_k(k, I, names));
    if (parts.operand_bin) {
        c.push_back(bin_with(k, X, I, names));
        c.push_back(bin_with(k, Y, I, names));
        c.push_back(bin_with(k, Z, I, names));
    }
    if (parts.def_wide) c.push_back(def_k(2 * k, in.I2, names));
    if (parts.internal_bin) {
        c.push_back(bin_with(2 * k, in.R, in.I2, names));
        c.push_back(bin_with(2 * k, in.S, in.I2, names));
        c.push_back(bin_with(2 * k, in.W, in.I2, names));
    }
    c.push_back(shift(k, in.S, X, I, names));

    auto xv = fresh_vars(names, k, "x");
    auto x = var_terms(xv);
    auto yv = fresh_vars(names, k, "y");
    auto y = var_terms(yv);
    auto o = repeat(kZero, k);
    NumRef Rx = slice(in.R, x), Ry = slice(in.R, y);

    auto phi_a = [&] {
        auto wv = fresh_vars(names, k, "w");
        return Formula::forall_in(wv, I, Rx.at(var_terms(wv), kZero));
    };
    auto no_lost_bits = [&] {
        auto wv = fresh_vars(names, k, "w");
        auto w = var_terms(wv);
        return Formula::forall_in(wv, I, Formula::disj({leq_k(k, x, w), slice(in.S, w).at(repeat(kLast, k), kZero)}));
    };
    BodyParts matrix{false, false, false, false};
    Formula phi_d = bsum_open(k, Ry, slice(in.S, x), Rx, I, slice(in.W, x), names, matrix);

    Formula step = Formula::forall_in(
        xv, I,
        Formula::disj({
            Formula::conj({is_zero_tuple(x), Y.at(x, kZero), phi_a()}),
            Formula::conj({is_zero_tuple(x), Y.at(x, kOne), eq_open(k, Rx, X, I, names)}),
            Formula::conj({Y.at(x, kZero), Formula::exists(yv, Formula::conj({succ_k(k, y, x), eq_open(k, Rx, Ry, I, names)}))}),
            Formula::conj({Y.at(x, kOne), Formula::exists(yv, Formula::conj({succ_k(k, y, x), phi_d})), no_lost_bits()}),
        }));
    c.push_back(step);
    c.push_back(eq_open(k, slice(in.R, repeat(kLast, k)), Z, I, names));
    (void)o;
    return Formula::conj(std::move(c));
}

namespace {

MultInternals fresh_mult(int k, NameSupply& names, const SOVar* I = nullptr) {
    MultInternals in;
    in.I = I ? *I : index_var(k, names);
    in.I2 = SOVar{names.fresh("I"), 2 * k, 2 * k};
    in.R = NumRef(SOVar{names.fresh("R"), 2 * k + 1, 2 * k});
    in.S = NumRef(SOVar{names.fresh("S"), 2 * k + 1, 2 * k});
    in.W = NumRef(SOVar{names.fresh("W"), 2 * k + 1, 2 * k});
    return in;
}

Formula exists_all(const std::vector<SOVar>& vars, Formula body) {
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) body = Formula::exists_so(*it, std::move(body));
    return body;
}

} // namespace

Formula bmult_k(int k, const SOVar& X, const SOVar& Y, const SOVar& Z, NameSupply& names) {
    require_closed_num(k, X);
    require_closed_num(k, Y);
    require_closed_num(k, Z);
    MultInternals in = fresh_mult(k, names);
    Formula body = bmult_open(k, NumRef(X), NumRef(Y), NumRef(Z), in, names);
    return exists_all({in.I, in.I2, in.R.var, in.S.var, in.W.var}, body);
}

Formula bdiv_open(int k, const NumRef& X, const NumRef& Y, const NumRef& Z, const NumRef& M, const DivInternals& in,
                  NameSupply& names, BodyParts parts) {
    require(k >= 1, "BDIV_k needs k >= 1");
    require_num(k, X);
    require_num(k, Y);
    require_num(k, Z);
    require_num(k, M);
    require_num(k, in.A);
    require_num(k, in.W2);
    const SOVar& I = in.mult.I;
    std::vector<Formula> c;
    if (parts.def) c.push_back(def_k(k, I, names));
    if (parts.operand_bin) {
        c.push_back(bin_with(k, X, I, names));
        c.push_back(bin_with(k, Y, I, names));
        c.push_back(bin_with(k, Z, I, names));
        c.push_back(bin_with(k, M, I, names));
    }
    if (parts.internal_bin) c.push_back(bin_with(k, in.A, I, names));
    c.push_back(negate(bnum_open(k, Y, kZero, I, names), names));
    c.push_back(lt_open(k, M, Y, I, names));
    c.push_back(bmult_open(k, Z, Y, in.A, in.mult, names, {false, parts.def_wide, false, parts.internal_bin}));
    c.push_back(bsum_open(k, in.A, M, X, I, in.W2, names, {false, false, false, parts.internal_bin}));
    return Formula::conj(std::move(c));
}

Formula bdiv_k(int k, const SOVar& X, const SOVar& Y, const SOVar& Z, const SOVar& M, NameSupply& names) {
    require_closed_num(k, X);
    require_closed_num(k, Y);
    require_closed_num(k, Z);
    require_closed_num(k, M);
    DivInternals in;
    in.mult = fresh_mult(k, names);
    in.A = NumRef(SOVar{names.fresh("A"), k + 1, k});
    in.W2 = NumRef(SOVar{names.fresh("W"), k + 1, k});
    Formula body = bdiv_open(k, NumRef(X), NumRef(Y), NumRef(Z), NumRef(M), in, names);
    return exists_all({in.mult.I, in.mult.I2, in.A.var, in.mult.R.var, in.mult.S.var, in.mult.W.var, in.W2.var}, body);
}

// ---------------------------------------------------------------------------
// Cardinality and clique

Formula card_leq(const SOVar& X, const SOVar& Y, NameSupply& names) {
    SOVar R{names.fresh("R"), X.arity + Y.arity, std::max(X.exponent, Y.exponent)};
    auto xv = fresh_vars(names, X.arity, "x");
    auto yv = fresh_vars(names, Y.arity, "y");
    auto zv = fresh_vars(names, X.arity, "z");
    auto x = var_terms(xv), y = var_terms(yv), z = var_terms(zv);
    Formula unique =
        Formula::forall_in(zv, X, Formula::disj({tuple_eq(z, x), Formula::so_atom(R, cat(z, y), true)}));
    Formula body = Formula::forall_in(
        xv, X, Formula::exists(yv, Formula::conj({Formula::so_atom(Y, y), Formula::so_atom(R, cat(x, y)), unique})));
    return Formula::exists_so(R, body);
}

Formula card_eq(const SOVar& X, const SOVar& Y, NameSupply& names) {
    return Formula::conj({card_leq(X, Y, names), card_leq(Y, X, names)});
}

namespace {

Formula clique_with(int k, NameSupply& names, const std::string& iname, const std::string& sname) {
    require(k >= 1, "clique sentence needs k >= 1");
    SOVar I{iname, k, k};
    SOVar S{sname, 1, k};
    std::string x = names.fresh("x"), y = names.fresh("y");
    Formula clique = Formula::forall_in(
        {x}, S,
        Formula::forall_in({y}, S,
                           Formula::disj({eq(Term::var(x), Term::var(y)),
                                          Formula::conj({Formula::rel_atom("E", {Term::var(x), Term::var(y)}),
                                                         Formula::rel_atom("E", {Term::var(y), Term::var(x)})})})));
    Formula body = Formula::conj({def_k(k, I, names), card_eq(S, I, names), clique});
    return Formula::exists_so(I, Formula::exists_so(S, body));
}

} // namespace

Formula clique_sentence(int k) {
    NameSupply names("_m");
    names.avoid("I");
    names.avoid("S");
    return clique_with(k, names, "I", "S");
}

// ---------------------------------------------------------------------------
// DNF word models

const char* const kWordPredicates[8] = {"I_lpar", "I_rpar", "I_and", "I_or", "I_neg", "I_0", "I_1", "I_X"};

namespace {
constexpr char kWordLetters[8] = {'(', ')', '&', '|', '!', '0', '1', 'X'};

Formula letter(int idx, const std::string& v, bool neg = false) {
    return Formula::rel_atom(kWordPredicates[idx], {Term::var(v)}, neg);
}
enum { LPAR, RPAR, AND, OR, NEG, B0, B1, XV };

Formula strictly_between(const std::string& lo, const std::string& x, const std::string& hi) {
    return Formula::conj({lt(Term::var(lo), Term::var(x)), lt(Term::var(x), Term::var(hi))});
}

// The clause (x0, x1) has a complementary pair, witnessed by the bijection H.
Formula complementary_pair(const SOVar& H) {
    auto v = [](const char* s) { return Term::var(s); };
    auto h = [&](const char* a, const char* b) { return Formula::so_atom(H, {v(a), v(b)}); };
    Formula inside = Formula::forall_in({"x", "y"}, H,
                                        Formula::conj({strictly_between("x0", "x", "x1"), strictly_between("x0", "y", "x1")}));
    Formula injective =
        Formula::forall_in({"x", "z"}, H, Formula::forall_in({"y", "u"}, H, Formula::disj({neq(v("z"), v("u")), eq(v("x"), v("y"))})));
    Formula functional =
        Formula::forall_in({"x", "y"}, H, Formula::forall_in({"u", "z"}, H, Formula::disj({neq(v("x"), v("u")), eq(v("y"), v("z"))})));
    Formula same_bits = Formula::forall_in(
        {"x", "y"}, H,
        Formula::disj({Formula::conj({letter(B0, "x"), letter(B0, "y")}), Formula::conj({letter(B1, "x"), letter(B1, "y")})}));
    Formula chain = Formula::forall_in(
        {"x", "y"}, H,
        Formula::disj({Formula::exists(std::vector<std::string>{"z1", "z2"}, Formula::conj({rel("SUCC", v("x"), v("z1")), rel("SUCC", v("y"), v("z2")),
                                                                   h("z1", "z2")})),
                       Formula::conj({rel("SUCC", v("x"), v("x5")), rel("SUCC", v("y"), v("y5"))})}));
    Formula literals = Formula::exists(
        std::vector<std::string>{"x2", "x3", "x4", "x5", "y2", "y3", "y4", "y5"},
        Formula::conj({rel("SUCC", v("x2"), v("x3")), rel("SUCC", v("y2"), v("y3")),
                       Formula::disj({letter(LPAR, "x2"), letter(AND, "x2")}), letter(XV, "x3"),
                       Formula::disj({letter(AND, "x5"), letter(RPAR, "x5")}), letter(NEG, "y2"), letter(XV, "y3"),
                       Formula::disj({letter(AND, "y5"), letter(RPAR, "y5")}), rel("SUCC", v("x3"), v("x4")),
                       rel("SUCC", v("y3"), v("y4")), h("x4", "y4"), chain}));
    return Formula::exists_so(H, Formula::conj({inside, injective, functional, same_bits, literals}));
}

// x0 and x1 delimit a clause: '(' at x0, ')' at x1, x0 < x1, no parenthesis in between.
Formula clause_negated(NameSupply& names) {
    (void)names;
    return Formula::disj({letter(LPAR, "x0", true), letter(RPAR, "x1", true), rel("LEQ", Term::var("x1"), Term::var("x0")),
                          Formula::exists("x", Formula::conj({strictly_between("x0", "x", "x1"),
                                                              Formula::disj({letter(LPAR, "x"), letter(RPAR, "x")})}))});
}

} // namespace

Vocabulary word_vocabulary() {
    Vocabulary v;
    for (const char* p : kWordPredicates) v.add_relation(p, 1);
    return v;
}

Structure word_structure(std::string_view word) {
    std::vector<int> letters;
    for (char c : word) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        const char* hit = std::find(std::begin(kWordLetters), std::end(kWordLetters), c);
        if (hit == std::end(kWordLetters)) throw StructureError(std::string("letter '") + c + "' is not in the DNF alphabet");
        letters.push_back(static_cast<int>(hit - std::begin(kWordLetters)));
    }
    std::map<std::string, RelationValue> rels;
    std::vector<std::vector<Tuple>> members(8);
    for (std::size_t i = 0; i < letters.size(); ++i) members[letters[i]].push_back({static_cast<Element>(i)});
    for (int p = 0; p < 8; ++p) rels.emplace(kWordPredicates[p], RelationValue(1, members[p]));
    return Structure(word_vocabulary(), letters.size(), std::move(rels), {});
}

Formula nodnfsat_sentence() {
    NameSupply names("_m");
    SOVar X0{"X0", 1, 0}, X1{"X1", 1, 0}, H{"H", 2, 1};
    // X0 and X1 hold at most one element, so H can lead: the sentence is in
    // QNF with prefix forall X0 forall X1 exists H.
    Formula body = complementary_pair(H).body();
    Formula per_clause = Formula::disj({clause_negated(names), body});
    Formula matrix = Formula::forall_in({"x0"}, X0, Formula::forall_in({"x1"}, X1, per_clause));
    return Formula::forall_so(X0, Formula::forall_so(X1, Formula::exists_so(H, matrix)));
}

Formula dnfsat_sentence() {
    NameSupply names("_m");
    names.avoid(nodnfsat_sentence());
    SOVar H{"H", 2, 1};
    Formula clause = negate(clause_negated(names), names);
    Formula no_pair = negate(complementary_pair(H), names);
    return Formula::exists(std::vector<std::string>{"x0", "x1"}, Formula::conj({clause, no_pair}));
}

// ---------------------------------------------------------------------------
// Macro table

namespace {
struct MacroInfo {
    const char* name;
    const char* sig;
    bool takes_k;
};
constexpr MacroInfo kMacros[] = {
    {"DEF", "S", true},     {"BIN", "S", true},     {"EQ", "SS", true},      {"LT", "SS", true},
    {"LE", "SS", true},     {"BNUM", "ST", true},   {"BSUM", "SSS", true},   {"BMULT", "SSS", true},
    {"BDIV", "SSSS", true}, {"LEQK", "KK", true},   {"SUCCK", "KK", true},   {"CARDLEQ", "SS", false},
    {"CARDEQ", "SS", false}, {"CLIQUE", "", false}, {"NODNFSAT", "", false}, {"DNFSAT", "", false},
};
} // namespace

std::optional<std::string> macro_signature(const std::string& name) {
    for (const auto& m : kMacros)
        if (name == m.name) return std::string(m.sig);
    return std::nullopt;
}

bool macro_takes_k(const std::string& name) {
    for (const auto& m : kMacros)
        if (name == m.name) return m.takes_k;
    return false;
}

Formula expand_macro(const std::string& name, int k, const std::vector<MacroArg>& args, NameSupply& names) {
    auto so = [&](std::size_t i) { return args.at(i).so; };
    auto terms = [&](std::size_t from, std::size_t count) {
        std::vector<Term> out;
        for (std::size_t i = 0; i < count; ++i) out.push_back(args.at(from + i).term);
        return out;
    };
    if (name == "DEF") return def_k(k, so(0), names);
    if (name == "BIN") return bin_k(k, so(0), names);
    if (name == "EQ") return eq_num(k, so(0), so(1), names);
    if (name == "LT") return lt_num(k, so(0), so(1), names);
    if (name == "LE") return le_num(k, so(0), so(1), names);
    if (name == "BNUM") return bnum_k(k, so(0), args.at(1).term, names);
    if (name == "BSUM") return bsum_k(k, so(0), so(1), so(2), names);
    if (name == "BMULT") return bmult_k(k, so(0), so(1), so(2), names);
    if (name == "BDIV") return bdiv_k(k, so(0), so(1), so(2), so(3), names);
    if (name == "LEQK") return leq_k(k, terms(0, k), terms(k, k));
    if (name == "SUCCK") return succ_k(k, terms(0, k), terms(k, k));
    if (name == "CARDLEQ") return card_leq(so(0), so(1), names);
    if (name == "CARDEQ") return card_eq(so(0), so(1), names);
    if (name == "CLIQUE") return clique_with(k, names, names.fresh("I"), names.fresh("S"));
    if (name == "NODNFSAT") return nodnfsat_sentence();
    if (name == "DNFSAT") return dnfsat_sentence();
    throw FormulaError("unknown macro @" + name);
}

// ---------------------------------------------------------------------------
// Codec and witnesses

std::uint32_t Codec::logn() const { return log_ceil(n); }

std::uint64_t Codec::positions() const { return sat_pow(logn(), k); }

std::uint64_t Codec::max_value() const {
    std::uint64_t p = positions();
    if (p > 63) throw Error("codec: " + std::to_string(p) + " bit positions do not fit a 64-bit value");
    return (std::uint64_t{1} << p) - 1;
}

Tuple Codec::position(std::uint64_t i) const {
    Tuple t(static_cast<std::size_t>(k));
    std::uint32_t l = logn();
    for (int j = k - 1; j >= 0; --j) {
        t[j] = static_cast<Element>(i % l);
        i /= l;
    }
    return t;
}

std::vector<Tuple> Codec::encode_tuples(std::uint64_t v, const Tuple& prefix) const {
    std::uint64_t p = positions();
    if (p <= 63 && v > max_value()) throw Error("codec: value " + std::to_string(v) + " out of range");
    std::vector<Tuple> out;
    for (std::uint64_t i = 0; i < p; ++i) {
        Tuple t = prefix;
        Tuple pos = position(i);
        t.insert(t.end(), pos.begin(), pos.end());
        t.push_back(i < 64 ? static_cast<Element>((v >> i) & 1u) : 0);
        out.push_back(std::move(t));
    }
    return out;
}

RelationValue Codec::encode(std::uint64_t v) const { return RelationValue(k + 1, encode_tuples(v)); }

std::optional<std::uint64_t> Codec::decode(const RelationValue& r) const {
    if (r.arity() != k + 1) return std::nullopt;
    std::uint64_t p = positions();
    if (r.size() != p || p > 63) return std::nullopt;
    std::uint64_t v = 0;
    for (std::uint64_t i = 0; i < p; ++i) {
        Tuple pos = position(i);
        Tuple one = pos, zero = pos;
        one.push_back(1);
        zero.push_back(0);
        bool has1 = r.contains(one), has0 = r.contains(zero);
        if (has1 == has0) return std::nullopt;
        if (has1) v |= std::uint64_t{1} << i;
    }
    return v;
}

RelationValue Codec::index_set() const {
    std::vector<Tuple> out;
    for (std::uint64_t i = 0; i < positions(); ++i) out.push_back(position(i));
    return RelationValue(k, std::move(out));
}

std::vector<Tuple> sum_carries(const Codec& c, std::uint64_t x, std::uint64_t y, const Tuple& prefix) {
    std::uint64_t p = c.positions();
    std::vector<Tuple> out;
    unsigned carry = 0;
    for (std::uint64_t i = 0; i < p; ++i) {
        Tuple t = prefix;
        Tuple pos = c.position(i);
        t.insert(t.end(), pos.begin(), pos.end());
        t.push_back(carry);
        out.push_back(std::move(t));
        unsigned s = static_cast<unsigned>((x >> i) & 1u) + static_cast<unsigned>((y >> i) & 1u) + carry;
        carry = s >> 1;
    }
    return out;
}

MultWitness mult_witness(const Codec& c, std::uint64_t x, std::uint64_t y, const Tuple& prefix) {
    MultWitness w;
    std::uint64_t p = c.positions();
    std::uint64_t mask = c.max_value();
    std::uint64_t partial = 0;
    for (std::uint64_t i = 0; i < p; ++i) {
        Tuple a = prefix;
        Tuple pos = c.position(i);
        a.insert(a.end(), pos.begin(), pos.end());
        std::uint64_t shifted = (x << i) & mask;
        std::uint64_t prev = partial;
        if ((y >> i) & 1u) partial = (partial + shifted) & mask;
        auto r = c.encode_tuples(partial, a);
        auto s = c.encode_tuples(shifted, a);
        auto carries = i == 0 ? c.encode_tuples(0, a) : sum_carries(c, prev, shifted, a);
        w.R.insert(w.R.end(), r.begin(), r.end());
        w.S.insert(w.S.end(), s.begin(), s.end());
        w.W.insert(w.W.end(), carries.begin(), carries.end());
    }
    return w;
}

} // namespace soplog::stdlib

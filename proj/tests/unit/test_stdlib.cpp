#include "doctest.h"
#include "oracles.hpp"
#include "soplog/error.hpp"
#include "soplog/semantics.hpp"
#include "soplog/stdlib.hpp"

#include <random>

using namespace soplog;
namespace sl = soplog::stdlib;

namespace {

std::vector<Term> elems(std::initializer_list<const char*> xs) {
    std::vector<Term> out;
    for (auto x : xs) out.push_back(Term::var(x));
    return out;
}

// Integer code of a tuple over B = {0..L-1}, leftmost most significant.
std::uint64_t tuple_int(const Tuple& t, std::uint32_t L) {
    std::uint64_t v = 0;
    for (Element e : t) v = v * L + e;
    return v;
}

} // namespace

TEST_CASE("leq_k and succ_k against integer order") {
    for (std::size_t n : {4u, 8u}) {
        Structure s = load_structure("domain " + std::to_string(n));
        std::uint32_t L = log_ceil(n);
        for (int k = 1; k <= 2; ++k) {
            std::vector<Term> x, y;
            for (int i = 0; i < k; ++i) {
                x.push_back(Term::var("x" + std::to_string(i)));
                y.push_back(Term::var("y" + std::to_string(i)));
            }
            Formula leq = sl::leq_k(k, x, y);
            Formula succ = sl::succ_k(k, x, y);
            std::uint64_t B = 1;
            for (int i = 0; i < k; ++i) B *= L;
            sl::Codec codec{n, k};
            for (std::uint64_t a = 0; a < B; ++a)
                for (std::uint64_t b = 0; b < B; ++b) {
                    Tuple ta = codec.position(a), tb = codec.position(b);
                    CHECK(tuple_int(ta, L) == a);
                    Valuation v;
                    for (int i = 0; i < k; ++i) {
                        v.fo["x" + std::to_string(i)] = ta[static_cast<std::size_t>(i)];
                        v.fo["y" + std::to_string(i)] = tb[static_cast<std::size_t>(i)];
                    }
                    CHECK(evaluate(s, leq, v) == (a <= b));
                    CHECK(evaluate(s, succ, v) == (b == a + 1));
                }
        }
    }
    Structure s8 = load_structure("domain 8");
    Formula s1 = sl::succ_k(1, elems({"a"}), elems({"b"}));
    auto at = [&](Element a, Element b) {
        Valuation v;
        v.fo["a"] = a;
        v.fo["b"] = b;
        return evaluate(s8, s1, v);
    };
    CHECK(at(0, 1));
    CHECK(at(1, 2));
    CHECK_FALSE(at(2, 3));
    Formula s2 = sl::succ_k(2, elems({"a", "b"}), elems({"c", "d"}));
    Valuation v;
    v.fo = {{"a", 0}, {"b", 2}, {"c", 1}, {"d", 0}};
    CHECK(evaluate(s8, s2, v));
    CHECK(sl::leq_k(1, elems({"a"}), elems({"b"})) == Formula::rel_atom("LEQ", elems({"a", "b"})));
}

TEST_CASE("DEF_k is satisfied exactly by B^k") {
    struct Case {
        std::size_t n;
        int k;
    };
    for (Case c : {Case{4, 1}, Case{8, 1}, Case{4, 2}}) {
        Structure s = load_structure("domain " + std::to_string(c.n));
        SOVar I{"I", c.k, c.k};
        NameSupply names("_m");
        names.avoid("I");
        Formula def = sl::def_k(c.k, I, names);
        RelationValue expected = sl::Codec{c.n, c.k}.index_set();
        int hits = 0;
        SOValueEnumerator e(c.n, c.k, c.k);
        RelationValue r;
        while (e.next(r)) {
            Valuation v;
            v.so["I"] = r;
            if (evaluate(s, def, v)) {
                ++hits;
                CHECK(r == expected);
            }
        }
        CHECK(hits == 1);
    }
}

TEST_CASE("BIN_k forces one bit per position") {
    for (std::size_t n : {4u, 8u}) {
        Structure s = load_structure("domain " + std::to_string(n));
        NameSupply names("_m");
        names.avoid("X");
        Formula bin = sl::bin_k(1, {"X", 2, 1}, names);
        std::uint32_t L = log_ceil(n);
        SOValueEnumerator e(n, 2, 1);
        RelationValue r;
        int hits = 0;
        while (e.next(r)) {
            Valuation v;
            v.so["X"] = r;
            bool ok = evaluate(s, bin, v);
            bool expected = r.size() == L;
            for (const auto& t : r.tuples())
                if (t[0] >= L || t[1] > 1) expected = false;
            if (expected)
                for (Element p = 0; p < L; ++p)
                    if (!(r.contains({p, 0}) || r.contains({p, 1}))) expected = false;
            CHECK(ok == expected);
            hits += ok;
        }
        CHECK(hits == (1 << L));
    }
    Structure s = load_structure("domain 4");
    NameSupply names("_m");
    names.avoid("X");
    Valuation v;
    v.so["X"] = RelationValue(2, {{0, 0}, {1, 1}});
    CHECK(evaluate(s, sl::bin_k(1, {"X", 2, 1}, names), v));
    v.so["X"] = RelationValue(2, {{0, 0}});
    CHECK_FALSE(evaluate(s, sl::bin_k(1, {"X", 2, 1}, names), v));
}

TEST_CASE("comparisons and BNUM at n=4 and n=8") {
    for (std::size_t n : {4u, 8u}) {
        Structure s = load_structure("domain " + std::to_string(n));
        sl::Codec c{n, 1};
        NameSupply names("_m");
        names.avoid("X");
        names.avoid("Y");
        SOVar X{"X", 2, 1}, Y{"Y", 2, 1};
        Formula eq = sl::eq_num(1, X, Y, names), lt = sl::lt_num(1, X, Y, names), le = sl::le_num(1, X, Y, names);
        Formula lt_rev = sl::lt_num(1, Y, X, names);
        for (std::uint64_t a = 0; a <= c.max_value(); ++a)
            for (std::uint64_t b = 0; b <= c.max_value(); ++b) {
                Valuation v;
                v.so["X"] = c.encode(a);
                v.so["Y"] = c.encode(b);
                bool e = evaluate(s, eq, v), l = evaluate(s, lt, v), g = evaluate(s, lt_rev, v);
                CHECK(e == (a == b));
                CHECK(l == (a < b));
                CHECK(evaluate(s, le, v) == (a <= b));
                CHECK(int(e) + int(l) + int(g) == 1);
            }
        Formula bnum = sl::bnum_k(1, X, Term::var("x"), names);
        for (std::uint64_t a = 0; a <= c.max_value(); ++a)
            for (Element x = 0; x < n; ++x) {
                Valuation v;
                v.so["X"] = c.encode(a);
                v.fo["x"] = x;
                CHECK(evaluate(s, bnum, v) == (a == x));
            }
    }
}

TEST_CASE("BNUM with k=2 keeps upper positions zero") {
    Structure s = load_structure("domain 4");
    sl::Codec c{4, 2};
    NameSupply names("_m");
    names.avoid("X");
    Formula bnum = sl::bnum_k(2, {"X", 3, 2}, Term::var("x"), names);
    for (std::uint64_t a = 0; a <= c.max_value(); ++a)
        for (Element x = 0; x < 4; ++x) {
            Valuation v;
            v.so["X"] = c.encode(a);
            v.fo["x"] = x;
            CHECK(evaluate(s, bnum, v) == (a == x));
        }
}

TEST_CASE("arithmetic at n=4, k=1") {
    Structure s = load_structure("domain 4");
    sl::Codec c{4, 1};
    NameSupply names("_m");
    for (auto x : {"X", "Y", "Z", "M"}) names.avoid(x);
    SOVar X{"X", 2, 1}, Y{"Y", 2, 1}, Z{"Z", 2, 1}, M{"M", 2, 1};
    Formula sum = sl::bsum_k(1, X, Y, Z, names), mult = sl::bmult_k(1, X, Y, Z, names);
    Formula div = sl::bdiv_k(1, X, Y, Z, M, names);
    for (std::uint64_t x = 0; x <= 3; ++x)
        for (std::uint64_t y = 0; y <= 3; ++y)
            for (std::uint64_t z = 0; z <= 3; ++z) {
                Valuation v;
                v.so["X"] = c.encode(x);
                v.so["Y"] = c.encode(y);
                v.so["Z"] = c.encode(z);
                CHECK(evaluate(s, sum, v) == (x + y == z));
                CHECK(evaluate(s, mult, v) == (x * y == z));
                for (std::uint64_t m = 0; m <= 3; ++m) {
                    v.so["M"] = c.encode(m);
                    CHECK(evaluate(s, div, v) == (y * z + m == x && m < y && y != 0));
                }
            }
}

TEST_CASE("open BSUM body checked under generated carries") {
    Structure s = load_structure("domain 8");
    sl::Codec c{8, 1};
    NameSupply names("_m");
    for (auto x : {"X", "Y", "Z", "I", "W"}) names.avoid(x);
    SOVar I{"I", 1, 1}, W{"W", 2, 1};
    Formula body = sl::bsum_open(1, sl::NumRef({"X", 2, 1}), sl::NumRef({"Y", 2, 1}), sl::NumRef({"Z", 2, 1}), I,
                                 sl::NumRef(W), names);
    for (std::uint64_t x = 0; x <= 7; ++x)
        for (std::uint64_t y = 0; x + y <= 7; ++y) {
            Valuation v;
            v.so["X"] = c.encode(x);
            v.so["Y"] = c.encode(y);
            v.so["Z"] = c.encode(x + y);
            v.so["I"] = c.index_set();
            v.so["W"] = RelationValue(2, sl::sum_carries(c, x, y));
            CHECK(evaluate(s, body, v));
        }
}

TEST_CASE("open BMULT body checked under generated witnesses") {
    Structure s = load_structure("domain 4");
    sl::Codec c{4, 1};
    sl::Codec wide{4, 2};
    NameSupply names("_m");
    for (auto x : {"X", "Y", "Z", "I", "J", "R", "S", "W"}) names.avoid(x);
    sl::MultInternals in{{"I", 1, 1}, {"J", 2, 2}, sl::NumRef({"R", 3, 2}), sl::NumRef({"S", 3, 2}), sl::NumRef({"W", 3, 2})};
    Formula body = sl::bmult_open(1, sl::NumRef({"X", 2, 1}), sl::NumRef({"Y", 2, 1}), sl::NumRef({"Z", 2, 1}), in, names);
    for (std::uint64_t x = 0; x <= 3; ++x)
        for (std::uint64_t y = 0; y <= 3 && x * y <= 3; ++y) {
            auto w = sl::mult_witness(c, x, y);
            Valuation v;
            v.so["X"] = c.encode(x);
            v.so["Y"] = c.encode(y);
            v.so["Z"] = c.encode(x * y);
            v.so["I"] = c.index_set();
            v.so["J"] = wide.index_set();
            v.so["R"] = RelationValue(3, w.R);
            v.so["S"] = RelationValue(3, w.S);
            v.so["W"] = RelationValue(3, w.W);
            CHECK(evaluate(s, body, v));
        }
}

TEST_CASE("cardinality comparison at n=4") {
    Structure s = load_structure("domain 4");
    NameSupply names("_m");
    names.avoid("A");
    names.avoid("B");
    Formula le = sl::card_leq({"A", 1, 1}, {"B", 1, 1}, names);
    Formula eq = sl::card_eq({"A", 1, 1}, {"B", 1, 1}, names);
    auto values = enumerate_so_values(s, 1, 1);
    for (const auto& a : values)
        for (const auto& b : values) {
            Valuation v;
            v.so["A"] = a;
            v.so["B"] = b;
            CHECK(evaluate(s, le, v) == (a.size() <= b.size()));
            CHECK(evaluate(s, eq, v) == (a.size() == b.size()));
            CHECK(reference_evaluate(s, le, v) == (a.size() <= b.size()));
        }
}

TEST_CASE("clique sentence against brute force") {
    Formula f = sl::clique_sentence(1);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 12; ++trial) {
        std::size_t n = 8;
        std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
        std::vector<Tuple> edges;
        std::bernoulli_distribution coin(0.35);
        for (Element i = 0; i < n; ++i)
            for (Element j = i + 1; j < n; ++j)
                if (coin(rng)) {
                    adj[i][j] = adj[j][i] = true;
                    edges.push_back({i, j});
                    edges.push_back({j, i});
                }
        Vocabulary v;
        v.add_relation("E", 2);
        Structure s(v, n, {{"E", RelationValue(2, edges)}}, {});
        CHECK(evaluate(s, f) == (oracle::max_clique(adj) >= 3));
    }
}

TEST_CASE("DNF sentences on small words") {
    Formula no = sl::nodnfsat_sentence(), yes = sl::dnfsat_sentence();
    for (std::string w : {"(X1&!X1)", "(X1)", "(X1)|(!X0&X0)", "(X01&!X01)|(X1&!X0)", "(X10&!X1)", "(!X1)|(X0&!X0)"}) {
        Structure s = sl::word_structure(w);
        bool sat = oracle::dnf_satisfiable(w);
        CHECK_MESSAGE(evaluate(s, yes) == sat, w);
        CHECK_MESSAGE(evaluate(s, no) == !sat, w);
    }
    CHECK_THROWS_AS(sl::word_structure("(Y)"), StructureError);
}

TEST_CASE("codec round trip and witnesses") {
    for (std::size_t n = 4; n <= 16; ++n)
        for (int k = 1; k <= 2; ++k) {
            sl::Codec c{n, k};
            if (c.positions() > 20) continue;
            for (std::uint64_t v = 0; v <= c.max_value(); v += 1 + c.max_value() / 200) {
                auto r = c.encode(v);
                CHECK(r.size() == c.positions());
                CHECK(c.decode(r) == v);
            }
        }
    sl::Codec c{4, 1};
    CHECK(c.encode(2) == RelationValue(2, {{0, 0}, {1, 1}}));
    CHECK_FALSE(c.decode(RelationValue(2, {{0, 0}})).has_value());
}

TEST_CASE("DNF sentences on random words") {
    Formula no = sl::nodnfsat_sentence(), yes = sl::dnfsat_sentence();
    std::mt19937_64 rng(11);
    int sat = 0;
    for (int i = 0; i < 30; ++i) {
        std::string w = oracle::random_dnf_word(rng, 2, 3, 2);
        Structure s = sl::word_structure(w);
        bool expected = oracle::dnf_satisfiable(w);
        sat += expected;
        bool y = evaluate(s, yes), n = evaluate(s, no);
        CHECK_MESSAGE(y == expected, w);
        CHECK_MESSAGE(n == !y, w);
    }
    CHECK(sat > 0);
    CHECK(sat < 30);
}

#include "doctest.h"
#include "oracles.hpp"
#include "soplog/error.hpp"
#include "soplog/semantics.hpp"
#include "soplog/stdlib.hpp"

#include <random>

using namespace soplog;

namespace {

Vocabulary unary_p() {
    Vocabulary v;
    v.add_relation("P", 1);
    return v;
}

EvalOptions with(Strategy s) {
    EvalOptions o;
    o.strategy = s;
    return o;
}

} // namespace

TEST_CASE("evaluate basics") {
    Structure s = load_structure("domain 3; rel P 1 {(1)}");
    CHECK(evaluate(s, parse_formula("exists x . x = ZERO")));
    CHECK(evaluate(s, parse_formula("exists x . P(x) & x = ONE")));
    CHECK_FALSE(evaluate(s, parse_formula("exists x . P(x) & x = MAX")));
    Valuation v;
    v.so["X"] = RelationValue(1);
    CHECK(evaluate(s, parse_formula("sovar X:1^1; forall (x) in X . P(x)"), v));
    CHECK(reference_evaluate(s, parse_formula("sovar X:1^1; forall (x) in X . P(x)"), v));
    CHECK_THROWS_AS(evaluate(s, parse_formula("P(x)")), EvalError);
    CHECK_THROWS_AS(evaluate(s, parse_formula("Q(ZERO)")), EvalError);
}

TEST_CASE("DEF_1 at n=8") {
    Structure s = load_structure("domain 8");
    Formula f = parse_formula("sovar I:1^1; @DEF{1}(I)");
    Valuation v;
    v.so["I"] = RelationValue(1, {{0}, {1}, {2}});
    CHECK(evaluate(s, f, v));
    v.so["I"] = RelationValue(1, {{0}, {1}});
    CHECK_FALSE(evaluate(s, f, v));
    v.so["I"] = RelationValue(1, {});
    CHECK_FALSE(evaluate(s, f, v));
}

TEST_CASE("enumeration counts") {
    Structure s4 = load_structure("domain 4");
    auto v = enumerate_so_values(s4, 1, 0);
    CHECK(v.size() == 5);
    CHECK(v[0].empty());
    CHECK(enumerate_so_values(s4, 1, 1).size() == 11);
    Structure s8 = load_structure("domain 8");
    CHECK(so_value_count(8, 2, 1) == oracle::binomial_sum(64, 3));
    for (std::size_t n = 3; n <= 6; ++n)
        for (int r = 1; r <= 2; ++r)
            for (int k = 0; k <= 2; ++k) {
                Structure s = load_structure("domain " + std::to_string(n));
                std::uint64_t u = 1;
                for (int i = 0; i < r; ++i) u *= n;
                std::uint64_t b = 1;
                for (int i = 0; i < k; ++i) b *= oracle::ceil_log2(n);
                if (oracle::binomial_sum(u, b) > 200000) continue;
                auto all = enumerate_so_values(s, r, k);
                CHECK(all.size() == oracle::binomial_sum(u, b));
                for (std::size_t i = 1; i < all.size(); ++i) {
                    bool ordered = all[i - 1].size() < all[i].size() ||
                                   (all[i - 1].size() == all[i].size() && all[i - 1].tuples() < all[i].tuples());
                    CHECK(ordered);
                }
            }
}

TEST_CASE("budget overflow is reported") {
    Structure s = load_structure("domain 8");
    EvalOptions o = with(Strategy::Enumerate);
    o.budget.max_candidates_per_quantifier = 10;
    try {
        evaluate(s, parse_formula("exists X:2^1 . X(ZERO, ONE) & X(ONE, ZERO) & X(MAX, MAX)"), {}, o);
        FAIL("no budget error");
    } catch (const BudgetExceeded& e) {
        CHECK(e.where() == "exists X:2^1");
        CHECK(e.count() == 11);
    }
    o.budget = {};
    o.budget.max_total_nodes = 100;
    CHECK_THROWS_AS(evaluate(s, parse_formula("exists X:2^1 . X(ZERO, ONE) & X(ONE, ZERO) & X(MAX, MAX)"), {}, o),
                    BudgetExceeded);
    CHECK(evaluate(s, parse_formula("exists X:2^1 . X(ZERO, ONE) & X(ONE, ZERO) & X(MAX, MAX)")));
    CHECK_FALSE(evaluate(s, parse_formula("exists X:2^1 . X(ZERO, ONE) & X(ONE, ZERO) & X(MAX, MAX) & X(ONE, ONE)")));
}

TEST_CASE("clique sentence at n=4") {
    Formula f = stdlib::clique_sentence(1);
    Structure edge = load_structure("domain 4; rel E 2 {(0,1)(1,0)}");
    Structure empty = load_structure("domain 4; rel E 2 {}");
    for (Strategy st : {Strategy::Auto, Strategy::PreferSat}) {
        CHECK(evaluate(edge, f, {}, with(st)));
        CHECK_FALSE(evaluate(empty, f, {}, with(st)));
    }
}

TEST_CASE("witness evaluation") {
    Structure s = load_structure("domain 4; rel E 2 {(0,1)(1,0)}");
    Formula f = parse_formula("exists X:1^1 . forall (x) in X . E(x,x)");
    CHECK(evaluate_with_witness(s, f, {{"X", {}}}));
    CHECK_FALSE(evaluate_with_witness(s, f, {{"X", {{0}}}}));
    CHECK_THROWS_AS(evaluate_with_witness(s, f, {{"X", {{0}, {1}, {2}}}}), EvalError);
    CHECK_THROWS_AS(evaluate_with_witness(s, f, {{"Y", {}}}), EvalError);
    CHECK_THROWS_AS(evaluate_with_witness(s, f, {{"X", {}}, {"Y", {}}}), EvalError);

    Formula c = stdlib::clique_sentence(1);
    Structure k4 = load_structure("domain 4; rel E 2 {(0,1)(1,0)(0,2)(2,0)(1,2)(2,1)(2,3)(3,2)}");
    Witness w{{"I", {{0}, {1}}}, {"S", {{1}, {2}}}};
    CHECK(evaluate_with_witness(k4, c, w));
    Witness bad{{"I", {{0}, {1}}}, {"S", {{1}, {3}}}};
    CHECK_FALSE(evaluate_with_witness(k4, c, bad));

    Witness parsed = parse_witness("witness I { (0) (1) }\nwitness S {(1)(2)}\n");
    CHECK(parsed.size() == 2);
    CHECK(parsed[1].tuples == std::vector<Tuple>{{1}, {2}});
    CHECK(parse_witness(format_witness(parsed)).size() == 2);
}

TEST_CASE("guarded encoding of an unbounded forall") {
    Vocabulary v = unary_p();
    Formula enc = parse_formula("forall X:1^0 . forall (x) in X . P(x) | x = ZERO");
    for (std::size_t n = 3; n <= 6; ++n)
        for (const auto& s : oracle::all_structures(v, n)) {
            bool expected = true;
            for (Element e = 1; e < n; ++e)
                if (!s.holds("P", {e})) expected = false;
            CHECK(evaluate(s, enc) == expected);
            CHECK(evaluate(s, enc, {}, with(Strategy::Enumerate)) == expected);
            CHECK(reference_evaluate(s, enc) == expected);
        }
}

TEST_CASE("strategies agree with the reference on random sentences") {
    std::mt19937_64 rng(5);
    Vocabulary v = unary_p();
    std::vector<Structure> structures;
    for (std::size_t n = 3; n <= 4; ++n)
        for (auto& s : oracle::all_structures(v, n)) structures.push_back(s);
    int disagreements = 0;
    for (int i = 0; i < 150; ++i) {
        Formula f = oracle::random_sentence(rng, {});
        for (std::size_t j = 0; j < structures.size(); j += 3) {
            const auto& s = structures[j];
            bool ref = reference_evaluate(s, f);
            for (Strategy st : {Strategy::Auto, Strategy::Enumerate, Strategy::PreferSat})
                if (evaluate(s, f, {}, with(st)) != ref) {
                    ++disagreements;
                    MESSAGE(print_formula(f), " on ", format_structure(s));
                }
        }
    }
    CHECK(disagreements == 0);
}

TEST_CASE("negated SO atom flips") {
    Structure s = load_structure("domain 4");
    Valuation v;
    v.so["X"] = RelationValue(1, {{2}});
    for (Element e = 0; e < 4; ++e) {
        v.fo["x"] = e;
        CHECK(evaluate(s, parse_formula("sovar X:1^1; X(x)"), v) != evaluate(s, parse_formula("sovar X:1^1; !X(x)"), v));
    }
}

#include "doctest.h"
#include "oracles.hpp"
#include "soplog/ast.hpp"
#include "soplog/error.hpp"
#include "soplog/stdlib.hpp"

#include <random>

using namespace soplog;

namespace {
void check_round_trip(const Formula& f) {
    std::string text = print_formula(f);
    ParseOptions opts;
    opts.allow_reserved = true;
    Formula g = parse_formula(text, opts);
    CHECK_MESSAGE(g == f, text);
}
} // namespace

TEST_CASE("parse basic forms") {
    Formula f = parse_formula("exists x . x = ZERO");
    REQUIRE(f.kind() == NodeKind::ExistsFO);
    CHECK(f.vars() == std::vector<std::string>{"x"});
    CHECK(f.body().kind() == NodeKind::Equal);
    CHECK(f.body().terms()[1] == Term::constant("ZERO"));

    Formula g = parse_formula("exists X:1^1 . forall (x) in X . E(x,x)");
    REQUIRE(g.kind() == NodeKind::ExistsSO);
    CHECK(g.so() == SOVar{"X", 1, 1});
    REQUIRE(g.body().kind() == NodeKind::ForallIn);
    CHECK(g.body().so() == SOVar{"X", 1, 1});
    CHECK(g.body().body().kind() == NodeKind::RelAtom);
    CHECK(g.body().body().rel() == "E");
}

TEST_CASE("parse errors") {
    CHECK_THROWS_WITH_AS(parse_formula("!(exists x . P(x))"), doctest::Contains("negation"), ParseError);
    CHECK_THROWS_AS(parse_formula("forall x . P(x)"), ParseError);
    CHECK_THROWS_AS(parse_formula("exists X:2^1 . X(x)"), ParseError);
    CHECK_THROWS_AS(parse_formula("P(x) &"), ParseError);
    CHECK_THROWS_AS(parse_formula("exists _a . P(_a)"), ParseError);
    CHECK_THROWS_AS(parse_formula("LEQ(x)"), ParseError);
    CHECK_THROWS_AS(parse_formula("P(x) & P(x,y)"), ParseError);
    try {
        parse_formula("P(x) &\n  & Q(y)");
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("negated atoms") {
    Formula f = parse_formula("!P(x) | x != y | !LEQ(x, y)");
    REQUIRE(f.kind() == NodeKind::Or);
    for (const auto& c : f.children()) CHECK(c.negated());
}

TEST_CASE("free variables") {
    auto fv = free_variables(parse_formula("sovar X:2^1; X(x,y)"));
    CHECK(fv.fo == std::set<std::string>{"x", "y"});
    CHECK(fv.so == std::set<SOVar>{SOVar{"X", 2, 1}});
    auto fv2 = free_variables(parse_formula("sovar X:1^0; exists x . X(x)"));
    CHECK(fv2.fo.empty());
    CHECK(fv2.so.size() == 1);
    NameSupply names;
    Formula sum = stdlib::bsum_k(1, {"X", 2, 1}, {"Y", 2, 1}, {"Z", 2, 1}, names);
    auto fv3 = free_variables(sum);
    CHECK(fv3.fo.empty());
    CHECK(fv3.so == std::set<SOVar>{SOVar{"X", 2, 1}, SOVar{"Y", 2, 1}, SOVar{"Z", 2, 1}});
}

TEST_CASE("substitute") {
    Formula f = parse_formula("exists x . P(x)");
    CHECK(substitute(f, {{"x", "y"}}) == parse_formula("exists y . P(y)"));
    CHECK(substitute(parse_formula("P(z)"), {{"z", "w"}}) == parse_formula("P(w)"));
    CHECK_THROWS_AS(substitute(parse_formula("exists x . E(x,z)"), {{"z", "x"}}), CaptureError);
}

TEST_CASE("printing round trips") {
    check_round_trip(stdlib::clique_sentence(1));
    check_round_trip(stdlib::clique_sentence(2));
    check_round_trip(parse_formula("exists X:1^1 . forall Y:2^0 . exists Z:1^2 . forall (a) in X . exists b . Y(a,b) | Z(b) & P(a)"));
    check_round_trip(stdlib::nodnfsat_sentence());
    check_round_trip(stdlib::dnfsat_sentence());
    NameSupply names;
    SOVar X{"X", 2, 1}, Y{"Y", 2, 1}, Z{"Z", 2, 1}, M{"M", 2, 1}, I{"I", 1, 1};
    check_round_trip(stdlib::def_k(1, I, names));
    check_round_trip(stdlib::bin_k(1, X, names));
    check_round_trip(stdlib::eq_num(1, X, Y, names));
    check_round_trip(stdlib::lt_num(1, X, Y, names));
    check_round_trip(stdlib::bnum_k(1, X, Term::var("x"), names));
    check_round_trip(stdlib::bsum_k(1, X, Y, Z, names));
    check_round_trip(stdlib::bmult_k(1, X, Y, Z, names));
    check_round_trip(stdlib::bdiv_k(1, X, Y, Z, M, names));
    check_round_trip(stdlib::bsum_k(2, {"X", 3, 2}, {"Y", 3, 2}, {"Z", 3, 2}, names));
    check_round_trip(stdlib::card_eq({"A", 1, 1}, {"B", 2, 1}, names));
}

TEST_CASE("random wffs round trip and validate") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        Formula f = oracle::random_sentence(rng, {});
        CHECK_NOTHROW(validate(f));
        CHECK(free_variables(f).fo.empty());
        check_round_trip(f);
    }
}

TEST_CASE("macros in formula text") {
    Formula f = parse_formula("sovar X:2^1, Y:2^1, Z:2^1; @BSUM{1}(X,Y,Z)");
    NameSupply names("_m");
    names.avoid("X");
    names.avoid("Y");
    names.avoid("Z");
    CHECK(free_variables(f).so.size() == 3);
    CHECK(parse_formula("@CLIQUE{1}()").kind() == NodeKind::ExistsSO);
    CHECK_THROWS_AS(parse_formula("@NOPE{1}(X)"), ParseError);
    CHECK_THROWS_AS(parse_formula("sovar X:3^1; @BIN{1}(X)"), Error);
}

TEST_CASE("negate pushes to atoms") {
    NameSupply names("_m");
    Formula f = parse_formula("sovar X:1^1; exists x . P(x) & forall (y) in X . !Q(y)");
    Formula g = negate(f, names);
    CHECK(g.kind() == NodeKind::ForallSO);
    CHECK(g.so().exponent == 0);
    CHECK_NOTHROW(validate(g));
}

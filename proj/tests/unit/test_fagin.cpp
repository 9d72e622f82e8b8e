#include "doctest.h"
#include "oracles.hpp"
#include "soplog/error.hpp"
#include "soplog/fagin.hpp"
#include "soplog/normalform.hpp"
#include "soplog/stdlib.hpp"

#include <random>

using namespace soplog;

namespace {

Vocabulary unary() {
    Vocabulary v;
    v.add_relation("P", 1);
    return v;
}

Structure with_p(const Vocabulary& v, std::size_t n, unsigned mask, std::map<std::string, Element> consts = {}) {
    std::vector<Tuple> ts;
    for (unsigned i = 0; i < n; ++i)
        if ((mask >> i) & 1u) ts.push_back({i});
    return Structure(v, n, {{"P", RelationValue(1, ts)}}, consts);
}

const WitnessEntry& entry(const Witness& w, const std::string& name) {
    for (const auto& e : w)
        if (e.name == name) return e;
    FAIL("no witness entry " << name);
    return w.front();
}

} // namespace

TEST_CASE("compiled sentences are Sigma 1") {
    for (const auto& m : {bit0_reader(), exists_one_guesser()}) {
        auto c = fagin::compile_machine(m, unary());
        CHECK(classify(c.sentence) == PrefixClass::sigma(1));
        CHECK_NOTHROW(validate(c.sentence, &c.vocab));
        // one leading quantifier per roster entry, each name bound once
        Formula f = c.sentence;
        std::set<std::string> bound;
        while (f.kind() == NodeKind::ExistsSO) {
            CHECK(bound.insert(f.so().name).second);
            f = f.body();
        }
        CHECK(bound.size() == c.plan.roster.size());
    }
    fagin::CompileOptions o;
    o.universal = true;
    CHECK(classify(fagin::compile_machine(bit0_reader(), unary(), o).sentence) == PrefixClass::pi(1));
}

TEST_CASE("compile errors") {
    CHECK_THROWS_AS(fagin::compile_machine(alternating_blocks(2), unary()), CompileError);
    CHECK_THROWS_AS(fagin::compile_machine(bit0_reader(), Vocabulary()), CompileError);
    Vocabulary clash;
    clash.add_relation("H", 1);
    CHECK_THROWS_AS(fagin::compile_machine(bit0_reader(), clash), CompileError);
    fagin::CompileOptions o;
    o.k_addr = 1; // 2 bits cannot address an input of length 4
    auto c = fagin::compile_machine(bit0_reader(), unary(), o);
    CHECK_THROWS_AS(fagin::check_parameters(c, 4), CompileError);
}

TEST_CASE("bit 0 reader over all unary structures at n=4") {
    auto c = fagin::compile_machine(bit0_reader(), unary());
    for (unsigned mask = 0; mask < 16; ++mask) {
        CAPTURE(mask);
        auto a = with_p(c.vocab, 4, mask);
        bool expect = mask & 1u;
        auto r = fagin::check_soundness(c, a);
        CHECK(r.machine_accepts() == expect);
        CHECK(r.witness_found == expect);
        CHECK(r.witness_checks == expect);
        CHECK(r.agrees());
        if (!expect) {
            CHECK(r.paths_checked >= 1);
            CHECK(r.refuted());
        }
    }
}

TEST_CASE("exists-a-1 guesser over all unary structures at n=4") {
    auto c = fagin::compile_machine(exists_one_guesser(), unary());
    for (unsigned mask = 0; mask < 16; ++mask) {
        CAPTURE(mask);
        auto r = fagin::check_soundness(c, with_p(c.vocab, 4, mask));
        CHECK(r.machine_accepts() == (mask != 0));
        CHECK(r.agrees());
        if (mask == 0) CHECK(r.paths_checked == 8);
    }
}

TEST_CASE("smallest domain n=3") {
    for (const auto& m : {bit0_reader(), exists_one_guesser()}) {
        auto c = fagin::compile_machine(m, unary());
        for (unsigned mask = 0; mask < 8; ++mask) {
            CAPTURE(mask);
            auto r = fagin::check_soundness(c, with_p(c.vocab, 3, mask));
            CHECK(r.agrees());
        }
    }
}

TEST_CASE("constants are read through the offset arithmetic") {
    Vocabulary v = unary();
    v.add_constant("c");
    auto c = fagin::compile_machine(exists_one_guesser(), v);
    for (unsigned mask = 0; mask < 16; ++mask)
        for (Element e = 0; e < 4; ++e) {
            CAPTURE(mask);
            CAPTURE(e);
            auto r = fagin::check_soundness(c, with_p(v, 4, mask, {{"c", e}}));
            CHECK(r.machine_accepts() == (mask != 0 || e != 0));
            CHECK(r.agrees());
        }
}

TEST_CASE("binary relation coordinates") {
    Vocabulary v;
    v.add_relation("E", 2);
    auto c = fagin::compile_machine(exists_one_guesser(), v);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 6; ++trial) {
        Structure a = trial == 0 ? Structure(v, 3, {{"E", RelationValue(2)}}, {}) : oracle::random_structure(v, 3, rng);
        auto r = fagin::check_soundness(c, a);
        CHECK(r.machine_accepts() == !a.relation("E").empty());
        CHECK(r.agrees());
    }
}

TEST_CASE("a witness does not transfer to a structure the machine rejects") {
    auto c = fagin::compile_machine(bit0_reader(), unary());
    auto w = fagin::extract_witness(c, with_p(c.vocab, 4, 0b0101));
    REQUIRE(w);
    CHECK(evaluate_with_witness(with_p(c.vocab, 4, 0b0101), c.sentence, *w));
    CHECK(evaluate_with_witness(with_p(c.vocab, 4, 0b1111), c.sentence, *w));
    CHECK_FALSE(evaluate_with_witness(with_p(c.vocab, 4, 0b0100), c.sentence, *w));
    CHECK_FALSE(fagin::extract_witness(c, with_p(c.vocab, 4, 0b0100)));
}

TEST_CASE("dropping any witness tuple falsifies the sentence") {
    auto c = fagin::compile_machine(exists_one_guesser(), unary());
    auto a = with_p(c.vocab, 4, 0b1000);
    auto w = *fagin::extract_witness(c, a);
    for (std::size_t e = 0; e < w.size(); ++e)
        for (std::size_t i = 0; i < w[e].tuples.size(); i += 3) {
            auto w2 = w;
            w2[e].tuples.erase(w2[e].tuples.begin() + static_cast<std::ptrdiff_t>(i));
            CAPTURE(w[e].name);
            CHECK_FALSE(evaluate_with_witness(a, c.sentence, w2));
        }
}

TEST_CASE("extracted relations are functional") {
    auto c = fagin::compile_machine(exists_one_guesser(), unary());
    auto a = with_p(c.vocab, 4, 0b0010);
    auto w = *fagin::extract_witness(c, a);
    std::uint32_t l = oracle::ceil_log2(4);
    std::size_t times = l * l * l;
    // exactly one tape symbol per (time, position)
    std::map<Tuple, int> cells;
    for (const char* name : {"T0", "T1", "T2"})
        for (const auto& t : entry(w, name).tuples) ++cells[t];
    CHECK(cells.size() == times * times);
    for (const auto& [t, count] : cells) CHECK(count == 1);

    // the head-uniqueness conjunct holds under direct evaluation
    SOVar I{"I", 3, 3}, H{"H", 6, 3};
    std::vector<std::string> t{"t1", "t2", "t3"}, p{"p1", "p2", "p3"}, q{"q1", "q2", "q3"};
    Formula unique = Formula::forall_in(
        t, I,
        Formula::forall_in(p, I,
                           Formula::forall_in(q, I,
                                              Formula::disj({Formula::so_atom(H, var_terms({"t1", "t2", "t3", "p1", "p2", "p3"}), true),
                                                             Formula::so_atom(H, var_terms({"t1", "t2", "t3", "q1", "q2", "q3"}), true),
                                                             stdlib::tuple_eq(var_terms(p), var_terms(q))}))));
    Valuation v;
    v.so["I"] = RelationValue(3, entry(w, "I").tuples);
    v.so["H"] = RelationValue(6, entry(w, "H").tuples);
    CHECK(evaluate(a, unique, v));
    CHECK(entry(w, "H").tuples.size() == times);
    auto broken = entry(w, "H").tuples;
    broken.pop_back(); // the last time point loses its head, time 0 gets a second one
    broken.push_back({0, 0, 0, 1, 1, 1});
    v.so["H"] = RelationValue(6, broken);
    CHECK_FALSE(evaluate(a, unique, v));
}

TEST_CASE("powers of n under codec witnesses") {
    // M1 holds the number n, which is MAX + 1 rather than MAX
    for (auto [n, k] : {std::pair<std::size_t, int>{4, 3}, {8, 2}}) {
        Vocabulary v = unary();
        Structure a = with_p(v, n, 0);
        stdlib::Codec c{n, k};
        SOVar M0{"M0", k + 1, k}, M1{"M1", k + 1, k}, M2{"M2", k + 1, k};
        NameSupply names;
        Formula bnum1 = stdlib::bnum_k(k, M0, Term::constant("ONE"), names);
        Formula bnum_max = stdlib::bnum_k(k, M1, Term::constant("MAX"), names);
        Formula mult = stdlib::bmult_k(k, M1, M1, M2, names);
        Valuation val;
        val.so["M0"] = c.encode(1);
        val.so["M1"] = c.encode(n);
        val.so["M2"] = c.encode(n * n);
        CHECK(evaluate(a, bnum1, val));
        CHECK(evaluate(a, mult, val));
        CHECK_FALSE(evaluate(a, bnum_max, val));
        val.so["M1"] = c.encode(n - 1);
        CHECK(evaluate(a, bnum_max, val));
        val.so["M1"] = c.encode(n);
        val.so["M2"] = c.encode(n * n - 1);
        CHECK_FALSE(evaluate(a, mult, val));
    }
}

TEST_CASE("metadata lists the roster") {
    auto c = fagin::compile_machine(bit0_reader(), unary());
    std::string meta = fagin::format_metadata(c);
    CHECK(meta.find("k = 3\n") != std::string::npos);
    CHECK(meta.find("k_addr = 2\n") != std::string::npos);
    CHECK(meta.find("var C 6 5 ") != std::string::npos);
    CHECK(meta.find("var H 6 3 ") != std::string::npos);
    CHECK(fagin::step_budget(c, 4) == 7);
}

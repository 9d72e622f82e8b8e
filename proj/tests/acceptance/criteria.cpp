#include "criteria.hpp"

#include "oracles.hpp"
#include "soplog/error.hpp"
#include "soplog/fagin.hpp"
#include "soplog/machine.hpp"
#include "soplog/normalform.hpp"
#include "soplog/semantics.hpp"
#include "soplog/stdlib.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace acceptance {

using namespace soplog;
namespace sl = soplog::stdlib;

namespace {

// Failure bookkeeping shared by worker threads; keeps the first few messages.
class Tally {
public:
    void fail(const std::string& what) {
        std::lock_guard<std::mutex> lock(mu_);
        if (failures_++ < 3) notes_.push_back(what);
    }
    std::size_t failures() const { return failures_; }
    std::string notes() const {
        std::string out;
        for (const auto& n : notes_) out += "; " + n;
        return out;
    }

private:
    mutable std::mutex mu_;
    std::size_t failures_ = 0;
    std::vector<std::string> notes_;
};

unsigned thread_count(const Options& o) {
    if (o.threads) return o.threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

template <class F>
void parallel_for(std::size_t count, const Options& o, Tally& tally, F body) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < count;) {
            try {
                body(i);
            } catch (const std::exception& e) {
                tally.fail("item " + std::to_string(i) + ": " + e.what());
            }
        }
    };
    unsigned t = std::min<std::size_t>(thread_count(o), std::max<std::size_t>(count, 1));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < t; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

Result verdict(const std::string& summary, const Tally& t) {
    Result r;
    r.pass = t.failures() == 0;
    r.detail = summary + ", failures " + std::to_string(t.failures()) + t.notes();
    return r;
}

Vocabulary unary() {
    Vocabulary v;
    v.add_relation("P", 1);
    return v;
}

std::vector<Structure> unary_structures(std::initializer_list<std::size_t> sizes) {
    std::vector<Structure> out;
    for (std::size_t n : sizes)
        for (auto& s : oracle::all_structures(unary(), n)) out.push_back(std::move(s));
    return out;
}

// ---------------------------------------------------------------------------

Result semantics_oracle(const Options& o) {
    std::mt19937_64 rng(20240101);
    oracle::WffShape shape{3, 1, true};
    std::vector<Formula> fs;
    for (int i = 0; i < 1000; ++i) fs.push_back(oracle::random_sentence(rng, shape));
    auto structures = unary_structures({3, 4, 5});
    Tally t;
    std::atomic<std::size_t> trues{0};
    parallel_for(fs.size(), o, t, [&](std::size_t i) {
        for (const auto& s : structures) {
            bool a = evaluate(s, fs[i]);
            bool b = reference_evaluate(s, fs[i]);
            trues += a;
            if (a != b) t.fail("formula " + std::to_string(i) + " n=" + std::to_string(s.size()) + ": " + print_formula(fs[i]));
        }
    });
    std::size_t cases = fs.size() * structures.size();
    return verdict(std::to_string(fs.size()) + " sentences x " + std::to_string(structures.size()) + " structures (" +
                       std::to_string(trues.load()) + "/" + std::to_string(cases) + " true)",
                   t);
}

Result qnf_preservation(const Options& o) {
    std::mt19937_64 rng(20240202);
    oracle::WffShape shape{3, 1, true};
    std::vector<Formula> fs;
    for (int i = 0; i < 300; ++i) fs.push_back(oracle::random_sentence(rng, shape));
    auto structures = unary_structures({3, 4});
    Tally t;
    std::atomic<int> max_blocks{0};
    parallel_for(fs.size(), o, t, [&](std::size_t i) {
        Formula q = to_qnf(fs[i]);
        PrefixClass c = classify(q);
        if (c.kind == PrefixClass::Kind::NotQNF) t.fail("formula " + std::to_string(i) + " not in QNF after toQNF");
        int m = c.m;
        for (int cur = max_blocks.load(); m > cur && !max_blocks.compare_exchange_weak(cur, m);) {}
        for (const auto& s : structures)
            if (evaluate(s, fs[i]) != evaluate(s, q))
                t.fail("formula " + std::to_string(i) + " n=" + std::to_string(s.size()) + ": " + print_formula(fs[i]));
    });
    return verdict(std::to_string(fs.size()) + " sentences x " + std::to_string(structures.size()) +
                       " structures, most blocks " + std::to_string(max_blocks.load()),
                   t);
}

Result arithmetic(const Options& o) {
    Tally t;
    std::size_t checks = 0;
    for (std::size_t n : {4u, 8u}) {
        Structure s = load_structure("domain " + std::to_string(n));
        sl::Codec c{n, 1};
        const std::uint64_t top = (std::uint64_t{1} << oracle::ceil_log2(n)) - 1;
        const std::uint64_t span = top + 1;
        NameSupply names("_m");
        for (auto x : {"X", "Y", "Z", "M", "x"}) names.avoid(x);
        SOVar X{"X", 2, 1}, Y{"Y", 2, 1}, Z{"Z", 2, 1}, M{"M", 2, 1};
        Formula sum = sl::bsum_k(1, X, Y, Z, names), mult = sl::bmult_k(1, X, Y, Z, names);
        Formula div = sl::bdiv_k(1, X, Y, Z, M, names);
        Formula eq = sl::eq_num(1, X, Y, names), lt = sl::lt_num(1, X, Y, names);
        Formula bnum = sl::bnum_k(1, X, Term::var("x"), names);
        auto valuation = [&](std::uint64_t x, std::uint64_t y, std::uint64_t z) {
            Valuation v;
            v.so["X"] = c.encode(x);
            v.so["Y"] = c.encode(y);
            v.so["Z"] = c.encode(z);
            return v;
        };
        std::string at = " at n=" + std::to_string(n);

        // one work item per (x, y) pair
        parallel_for(span * span, o, t, [&](std::size_t item) {
            std::uint64_t x = item / span, y = item % span;
            Valuation v = valuation(x, y, 0);
            if (evaluate(s, eq, v) != (x == y)) t.fail("=1 " + std::to_string(x) + "," + std::to_string(y) + at);
            if (evaluate(s, lt, v) != (x < y)) t.fail("<1 " + std::to_string(x) + "," + std::to_string(y) + at);
            for (std::uint64_t z = 0; z <= top; ++z) {
                v.so["Z"] = c.encode(z);
                std::string tag = std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(z) + at;
                if (evaluate(s, sum, v) != (x + y == z)) t.fail("BSUM " + tag);
                if (evaluate(s, mult, v) != (x * y == z)) t.fail("BMULT " + tag);
                for (std::uint64_t m = 0; m <= top; ++m) {
                    v.so["M"] = c.encode(m);
                    bool expect = y * z + m == x && m < y && y != 0;
                    if (evaluate(s, div, v) != expect) t.fail("BDIV " + tag + "," + std::to_string(m));
                }
            }
        });
        for (std::uint64_t val = 0; val <= top; ++val)
            for (Element e = 0; e < n; ++e) {
                Valuation v;
                v.so["X"] = c.encode(val);
                v.fo["x"] = e;
                if (evaluate(s, bnum, v) != (val == e))
                    t.fail("BNUM " + std::to_string(val) + "," + std::to_string(e) + at);
            }
        checks += span * span * (2 + span * (2 + span)) + span * n;
    }
    return verdict(std::to_string(checks) + " operand combinations", t);
}

Result def_bin_forcing(const Options& o) {
    struct Case {
        std::size_t n;
        int k;
    };
    Tally t;
    std::ostringstream summary;
    for (Case cs : {Case{4, 1}, Case{8, 1}, Case{4, 2}}) {
        Structure s = load_structure("domain " + std::to_string(cs.n));
        sl::Codec codec{cs.n, cs.k};
        RelationValue expected = codec.index_set();
        std::string at = " n=" + std::to_string(cs.n) + " k=" + std::to_string(cs.k);
        NameSupply names("_m");
        names.avoid("I");
        names.avoid("X");
        Formula def = sl::def_k(cs.k, {"I", cs.k, cs.k}, names);
        Formula bin = sl::bin_k(cs.k, {"X", cs.k + 1, cs.k}, names);

        auto sweep = [&](const char* var, int arity, const Formula& f, auto&& check) {
            SOValueEnumerator e(cs.n, arity, cs.k);
            std::atomic<std::size_t> hits{0}, total{0};
            std::vector<RelationValue> batch;
            auto flush = [&] {
                parallel_for(batch.size(), o, t, [&](std::size_t i) {
                    Valuation v;
                    v.so[var] = batch[i];
                    bool ok = evaluate(s, f, v);
                    hits += ok;
                    check(batch[i], ok);
                });
                total += batch.size();
                batch.clear();
            };
            RelationValue r;
            while (e.next(r)) {
                batch.push_back(r);
                if (batch.size() == 8192) flush();
            }
            flush();
            return std::pair<std::size_t, std::size_t>(hits.load(), total.load());
        };

        auto [def_hits, def_total] = sweep("I", cs.k, def, [&](const RelationValue& r, bool ok) {
            if (ok && r != expected) t.fail("DEF accepts " + format_relation(r) + at);
        });
        if (def_hits != 1) t.fail("DEF satisfied by " + std::to_string(def_hits) + " relations" + at);

        auto [bin_hits, bin_total] = sweep("X", cs.k + 1, bin, [&](const RelationValue& r, bool ok) {
            if (!ok) return;
            // one bit per index tuple and nothing else
            std::map<Tuple, int> bits;
            bool clean = true;
            for (const auto& tu : r.tuples()) {
                Tuple p(tu.begin(), tu.end() - 1);
                if (!expected.contains(p) || tu.back() > 1) clean = false;
                ++bits[p];
            }
            clean = clean && bits.size() == expected.size();
            for (const auto& [p, count] : bits) clean = clean && count == 1;
            if (!clean) t.fail("BIN accepts " + format_relation(r) + at);
        });
        std::size_t want = std::size_t{1} << expected.size();
        if (bin_hits != want)
            t.fail("BIN satisfied by " + std::to_string(bin_hits) + " relations, expected " + std::to_string(want) + at);
        summary << at.substr(1) << ": DEF 1/" << def_total << ", BIN " << bin_hits << "/" << bin_total << "; ";
    }
    std::string text = summary.str();
    return verdict(text.substr(0, text.size() - 2), t);
}

Structure graph(std::size_t n, const std::vector<std::vector<bool>>& adj) {
    Vocabulary v;
    v.add_relation("E", 2);
    std::vector<Tuple> edges;
    for (Element i = 0; i < n; ++i)
        for (Element j = 0; j < n; ++j)
            if (adj[i][j]) edges.push_back({i, j});
    return Structure(v, n, {{"E", RelationValue(2, edges)}}, {});
}

Result example_sentences(const Options& o) {
    Tally t;
    Formula clique = sl::clique_sentence(1);
    std::vector<std::pair<std::size_t, std::vector<std::vector<bool>>>> graphs;
    for (unsigned mask = 0; mask < 64; ++mask) {
        std::vector<std::vector<bool>> adj(4, std::vector<bool>(4, false));
        int bit = 0;
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j, ++bit)
                if ((mask >> bit) & 1u) adj[i][j] = adj[j][i] = true;
        graphs.emplace_back(4, adj);
    }
    std::mt19937_64 rng(20240505);
    std::bernoulli_distribution coin(0.3);
    for (int g = 0; g < 50; ++g) {
        std::vector<std::vector<bool>> adj(8, std::vector<bool>(8, false));
        for (int i = 0; i < 8; ++i)
            for (int j = i + 1; j < 8; ++j)
                if (coin(rng)) adj[i][j] = adj[j][i] = true;
        graphs.emplace_back(8, adj);
    }
    std::atomic<int> with_clique{0};
    parallel_for(graphs.size(), o, t, [&](std::size_t i) {
        auto& [n, adj] = graphs[i];
        bool expect = oracle::max_clique(adj) >= static_cast<int>(oracle::ceil_log2(n));
        with_clique += expect;
        if (evaluate(graph(n, adj), clique) != expect) t.fail("clique graph " + std::to_string(i));
    });

    Formula no = sl::nodnfsat_sentence(), yes = sl::dnfsat_sentence();
    std::vector<std::string> words{"(X1&!X1)", "(X1)", "(X0)|(!X0&X0)", "(X01&!X01)|(X1&!X0)", "(!X1&X1)|(X0&!X0)"};
    // one-bit indices make complementary pairs common
    while (words.size() < 120)
        words.push_back(words.size() % 2 ? oracle::random_dnf_word(rng, 2, 3, 2) : oracle::random_dnf_word(rng, 2, 3, 1));
    std::atomic<int> sat{0};
    parallel_for(words.size(), o, t, [&](std::size_t i) {
        Structure s = sl::word_structure(words[i]);
        bool expect = oracle::dnf_satisfiable(words[i]);
        sat += expect;
        bool y = evaluate(s, yes), n = evaluate(s, no);
        if (y != expect) t.fail("DNFSAT " + words[i]);
        if (n != !expect) t.fail("NODNFSAT " + words[i]);
        if (y == n) t.fail("DNFSAT != not NODNFSAT on " + words[i]);
    });
    return verdict(std::to_string(graphs.size()) + " graphs (" + std::to_string(with_clique.load()) + " with clique), " +
                       std::to_string(words.size()) + " DNF words (" + std::to_string(sat.load()) + " satisfiable)",
                   t);
}

oracle::Cnf random_cnf(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> clauses(1, 4), len(1, 4), var(1, 4);
    std::bernoulli_distribution neg(0.5);
    oracle::Cnf f(static_cast<std::size_t>(clauses(rng)));
    for (auto& c : f) {
        int l = len(rng);
        for (int i = 0; i < l; ++i) c.push_back(neg(rng) ? -var(rng) : var(rng));
    }
    return f;
}

Result cnf_machine(const Options& o) {
    const int k = 2;
    MachineDesc m = polylog_cnf_sat_machine(k);
    std::vector<oracle::Cnf> cases{{{1}, {-1}},        {{1, 2}, {-1}, {-2}},   {{1}, {2}, {-1, -2}}, {{}},
                                   {{3}, {-3, 4}, {-4}}, {{1, 2}, {1, -2}, {-1, 2}, {-1, -2}}};
    std::mt19937_64 rng(20240606);
    while (cases.size() < 120) cases.push_back(random_cnf(rng));

    struct Run {
        std::uint64_t length = 0, steps = 0;
    };
    std::vector<Run> runs(cases.size());
    Tally t;
    std::atomic<int> unsat{0};
    RunConfig rc;
    rc.step_budget = 50'000'000;
    parallel_for(cases.size(), o, t, [&](std::size_t i) {
        BitString input = encode_cnf(cases[i], k);
        RunResult r = run(m, input, rc);
        bool expect = oracle::brute_force_sat(cases[i]);
        unsat += !expect;
        if (r.outcome == Outcome::BudgetExceeded) t.fail("instance " + std::to_string(i) + " exceeded the budget");
        else if (r.accepted() != expect) t.fail("instance " + std::to_string(i) + " decided wrongly");
        runs[i] = {input.size(), r.steps_used};
    });

    // Length classes by ⌈log N⌉; c is the largest steps/L^k' ratio of the
    // smallest class. The fit is the least k' whose bound holds everywhere.
    std::map<std::uint32_t, std::uint64_t> worst; // L -> most steps
    for (const auto& r : runs) {
        std::uint32_t L = oracle::ceil_log2(r.length);
        worst[L] = std::max(worst[L], r.steps);
    }
    std::uint32_t smallest = worst.begin()->first;
    int fitted = 0;
    double fitted_c = 0;
    for (int kp = 1; kp <= 6 && !fitted; ++kp) {
        double c = 0;
        for (const auto& r : runs)
            if (oracle::ceil_log2(r.length) == smallest)
                c = std::max(c, static_cast<double>(r.steps) / std::pow(smallest, kp));
        bool ok = true;
        for (const auto& r : runs)
            ok = ok && static_cast<double>(r.steps) <= c * std::pow(oracle::ceil_log2(r.length), kp) + 1e-9;
        if (ok) {
            fitted = kp;
            fitted_c = c;
        }
    }
    if (!fitted) t.fail("no k' in 1..6 bounds the step counts");
    std::ostringstream d;
    d << cases.size() << " instances (" << unsat.load() << " unsatisfiable), classes";
    for (const auto& [L, s] : worst) d << " L=" << L << ":" << s;
    d << ", fit c=" << fitted_c << " k'=" << fitted;
    if (worst.size() < 2) t.fail("only one length class");
    return verdict(d.str(), t);
}

Result encoder(const Options&) {
    std::mt19937_64 rng(20240707);
    Tally t;
    std::uniform_int_distribution<int> nrel(1, 3), arity(1, 3), nconst(0, 2), size(3, 7);
    for (int i = 0; i < 200; ++i) {
        Vocabulary v;
        int r = nrel(rng);
        for (int j = 0; j < r; ++j) v.add_relation("R" + std::to_string(j), arity(rng));
        int c = nconst(rng);
        for (int j = 0; j < c; ++j) v.add_constant("c" + std::to_string(j));
        std::size_t n = static_cast<std::size_t>(size(rng));
        Structure s = oracle::random_structure(v, n, rng);
        BitString b = encode(s);
        std::uint64_t expect = c * oracle::ceil_log2(n);
        for (const auto& rel : v.relations()) expect += static_cast<std::uint64_t>(std::pow(n, rel.arity));
        if (b.size() != expect || encoded_length(v, n) != expect) t.fail("length of structure " + std::to_string(i));
        Structure back = oracle::decode_structure(v, n, b);
        if (format_structure(back) != format_structure(s)) t.fail("round trip of structure " + std::to_string(i));
    }
    return verdict("200 random structures", t);
}

Result fagin_compiler(const Options& o) {
    Tally t;
    std::atomic<int> accepted{0}, refutations{0};
    struct Job {
        const fagin::CompiledMachine* c;
        unsigned mask;
        bool expect;
    };
    std::vector<fagin::CompiledMachine> compiled;
    for (const auto& m : {bit0_reader(), exists_one_guesser()}) compiled.push_back(fagin::compile_machine(m, unary()));
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < compiled.size(); ++i) {
        if (classify(compiled[i].sentence) != PrefixClass::sigma(1)) t.fail("machine " + std::to_string(i) + " not Sigma 1");
        for (unsigned mask = 0; mask < 16; ++mask)
            jobs.push_back({&compiled[i], mask, i == 0 ? (mask & 1u) != 0 : mask != 0});
    }
    parallel_for(jobs.size(), o, t, [&](std::size_t i) {
        const Job& j = jobs[i];
        std::vector<Tuple> ps;
        for (Element e = 0; e < 4; ++e)
            if ((j.mask >> e) & 1u) ps.push_back({e});
        Structure a(j.c->vocab, 4, {{"P", RelationValue(1, ps)}}, {});
        auto r = fagin::check_soundness(*j.c, a);
        std::string tag = "job " + std::to_string(i) + " mask " + std::to_string(j.mask);
        if (r.machine_accepts() != j.expect) t.fail(tag + ": machine decision");
        if (r.machine_accepts() != (r.witness_found && r.witness_checks)) t.fail(tag + ": witness disagrees");
        if (!r.machine_accepts()) {
            refutations += r.refuted();
            if (!r.refuted()) t.fail(tag + ": refutation found an accepting trace");
        }
        accepted += r.machine_accepts();
    });
    return verdict(std::to_string(jobs.size()) + " machine/structure pairs (" + std::to_string(accepted.load()) +
                       " accepted, " + std::to_string(refutations.load()) + " refuted)",
                   t);
}

Result alternation(const Options&) {
    Tally t;
    std::string seen;
    RunConfig rc;
    rc.step_budget = 1'000'000;
    for (int m = 1; m <= 3; ++m) {
        RunResult r = run(alternating_blocks(m), BitString::parse("0110"), rc);
        seen += (m > 1 ? "," : "") + std::to_string(r.alternations_used);
        if (r.outcome == Outcome::BudgetExceeded) t.fail("m=" + std::to_string(m) + " exceeded the budget");
        if (r.alternations_used != m) t.fail("m=" + std::to_string(m) + " reported " + std::to_string(r.alternations_used));
    }
    return verdict("alternations for m=1,2,3: " + seen, t);
}

} // namespace

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {1, "semantics oracle equivalence", 300, semantics_oracle},
        {2, "QNF preservation", 300, qnf_preservation},
        {3, "arithmetic exactness", 900, arithmetic},
        {4, "DEF/BIN forcing", 0, def_bin_forcing},
        {5, "example sentences", 0, example_sentences},
        {6, "polylogCNFSAT machine", 0, cnf_machine},
        {7, "encoder", 0, encoder},
        {8, "Fagin compiler", 600, fagin_compiler},
        {9, "alternation accounting", 0, alternation},
    };
    return all;
}

Result run_criterion(const Criterion& c, const Options& opts) {
    auto start = std::chrono::steady_clock::now();
    Result r;
    try {
        r = c.run(opts);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.id = c.id;
    r.name = c.name;
    r.limit_seconds = c.limit_seconds;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && r.seconds > c.limit_seconds) {
        r.pass = false;
        r.detail += ", over the time limit";
    }
    return r;
}

std::string format_result(const Result& r) {
    std::ostringstream out;
    out << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.name << "): " << r.detail;
    out.setf(std::ios::fixed);
    out.precision(1);
    out << " [" << r.seconds << "s";
    if (r.limit_seconds > 0) out << " of " << r.limit_seconds << "s";
    out << "]";
    return out.str();
}

} // namespace acceptance

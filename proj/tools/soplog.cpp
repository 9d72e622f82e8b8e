// soplog: command-line front end for the SO^plog toolkit.
//
// Exit status: 0 true/accept/pass, 1 false/reject/fail, 2 usage or input
// error, 3 budget exceeded.

#include "CLI11.hpp"
#include "criteria.hpp"
#include "soplog/error.hpp"
#include "soplog/fagin.hpp"
#include "soplog/machine.hpp"
#include "soplog/normalform.hpp"
#include "soplog/semantics.hpp"
#include "soplog/structure.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

using namespace soplog;

namespace {

enum Exit { kTrue = 0, kFalse = 1, kUsage = 2, kBudget = 3 };

// Bad command-line input discovered after parsing (missing file, bad mix of flags).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Prefixes parse errors with the file they came from.
template <class F>
auto from_file(const std::string& path, F parse) {
    std::string text = read_file(path);
    try {
        return parse(text);
    } catch (const ParseError& e) {
        throw UsageError(path + ":" + e.what());
    } catch (const StructureError& e) {
        throw UsageError(path + ": " + e.what());
    }
}

const char* kStructureFormat = R"(Structure file:
  domain 4
  rel E 2 { (0,1) (1,0) }
  const c 2
Statements are separated by newlines or ';'. '#' starts a comment.)";

const char* kFormulaFormat = R"(Formula file:
  sovar X:2^1;   const c;      optional declarations of free symbols
  exists X:2^1 . forall (x, y) in X . E(x, y) | x = c
Connectives & | and !R(..) on atoms; 'exists x .' for FO variables;
'forall (x..) in X .' guarded universals; 'exists/forall X:r^k .' for SO
variables with arity r and cardinality bound ceil(log n)^k. Built-ins:
LEQ SUCC BIT ZERO ONE MAX LOGN LOGN_MINUS_1. Macros: @DEF{k}(I), @BIN{k}(X),
@EQ/@LT/@LE{k}(X, Y), @BNUM{k}(X, t), @BSUM/@BMULT{k}(X, Y, Z),
@BDIV{k}(X, Y, Z, M), @LEQK/@SUCCK{k}(x.., y..), @CARDLEQ/@CARDEQ(X, Y),
@CLIQUE(), @NODNFSAT(), @DNFSAT(). '#' starts a comment.)";

const char* kWitnessFormat = R"(Witness file: one block per leading existential SO variable, in order:
  witness X { (0,1) (2,2) }
  witness Y { })";

const char* kMachineFormat = R"(Machine file:
  states: q acc rej
  initial: q
  accepting: acc
  modes: q=E                 E existential, U universal, default deterministic
  tapes: 1
  alphabet: 0 1 _
  trans: (q, 1, *, _) -> (acc, */S, 1/R)
A line reads (state, input, address-cell, work cells..) and gives
(next, address write/move, work write/move..). '*' matches anything or keeps
the symbol; moves are L R S. '<' is the input endmark and '$' the cell past
the address tape. '//' starts a comment.)";

const char* kVocabularyFormat = R"(Vocabulary file:
  rel E 2
  const c)";

struct Common {
    unsigned threads = 0;
    bool allow_reserved = false;
};

struct EvalFlags {
    std::string structure, formula, witness;
    std::uint64_t budget = EvalBudget{}.max_total_nodes;
    std::uint64_t candidates = EvalBudget{}.max_candidates_per_quantifier;
    std::string strategy = "auto";
    bool stats = false;
};

EvalOptions eval_options(const EvalFlags& f) {
    EvalOptions o;
    o.budget.max_total_nodes = f.budget;
    o.budget.max_candidates_per_quantifier = f.candidates;
    o.strategy = f.strategy == "enumerate" ? Strategy::Enumerate : f.strategy == "sat" ? Strategy::PreferSat : Strategy::Auto;
    return o;
}

void add_eval_flags(CLI::App* cmd, EvalFlags& f) {
    cmd->add_option("-s,--structure", f.structure, "structure file")->required();
    cmd->add_option("-f,--formula", f.formula, "formula file")->required();
    cmd->add_option("--budget", f.budget, "most evaluation nodes before giving up (exit 3)");
    cmd->add_option("--candidates", f.candidates, "most candidate relations per SO quantifier");
    cmd->add_option("--strategy", f.strategy, "SO quantifier strategy")
        ->check(CLI::IsMember({"auto", "enumerate", "sat"}));
    cmd->add_flag("--stats", f.stats, "print evaluation counters to stderr");
}

void print_stats(const EvalStats& s) {
    std::cerr << "nodes = " << s.nodes << "\nsat_calls = " << s.sat_calls << "\nsat_variables = " << s.sat_variables
              << "\nsat_clauses = " << s.sat_clauses << "\nenumerated_candidates = " << s.enumerated_candidates << "\n";
}

Formula load_formula(const std::string& path, const Common& common, const Vocabulary* vocab) {
    ParseOptions po;
    po.vocab = vocab;
    po.allow_reserved = common.allow_reserved;
    return from_file(path, [&](const std::string& t) { return parse_formula(t, po); });
}

Structure load_structure_file(const std::string& path) {
    return from_file(path, [](const std::string& t) { return load_structure(t); });
}

int truth(bool v) {
    std::cout << (v ? "true" : "false") << "\n";
    return v ? kTrue : kFalse;
}

struct MachineFlags {
    std::string machine, input, structure;
    std::uint64_t steps_c = 1;
    int steps_k = 1;
    std::optional<std::uint64_t> steps;
    int alts = -1;
    bool trace = false;
};

struct CompileFlags {
    std::string machine, vocab, structure, meta;
    int k = fagin::CompileOptions{}.k;
    int k_addr = fagin::CompileOptions{}.k_addr;
    bool universal = false;
};

void add_compile_flags(CLI::App* cmd, CompileFlags& f) {
    cmd->add_option("-m,--machine", f.machine, "machine file")->required();
    cmd->add_option("-k", f.k, "arity of time and work-tape position tuples")->check(CLI::Range(1, 8));
    cmd->add_option("--k-addr,--kp", f.k_addr, "arity of address position tuples (k')")->check(CLI::Range(1, 8));
}

fagin::CompiledMachine compile(const CompileFlags& f, const Vocabulary& vocab) {
    MachineDesc m = from_file(f.machine, [](const std::string& t) { return parse_machine(t); });
    fagin::CompileOptions o;
    o.k = f.k;
    o.k_addr = f.k_addr;
    o.universal = f.universal;
    return fagin::compile_machine(m, vocab, o);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"soplog: evaluate, normalise and compile SO^plog sentences and run random-access machines"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    Common common;
    app.add_option("--threads", common.threads, "worker threads for selftest (0: all cores)");
    app.add_flag("--allow-reserved", common.allow_reserved, "accept identifiers starting with '_' in formula files");
    app.footer("Exit status: 0 true/accept/pass, 1 false/reject/fail, 2 usage or input error, 3 budget exceeded.");

    EvalFlags ev;
    auto* eval = app.add_subcommand("eval", "evaluate a sentence on a structure; prints true or false");
    add_eval_flags(eval, ev);
    eval->footer(std::string(kStructureFormat) + "\n\n" + kFormulaFormat);

    EvalFlags ew;
    auto* eval_w = app.add_subcommand("eval-witness", "evaluate with the leading existential SO block fixed by a witness");
    add_eval_flags(eval_w, ew);
    eval_w->add_option("-w,--witness", ew.witness, "witness file")->required();
    eval_w->footer(std::string(kWitnessFormat) + "\n\n" + kStructureFormat);

    std::string norm_formula, norm_vocab;
    bool norm_report = false;
    auto* normalize = app.add_subcommand("normalize", "print the quantifier-prefix normal form of a sentence");
    normalize->add_option("-f,--formula", norm_formula, "formula file")->required();
    normalize->add_option("-v,--vocabulary", norm_vocab, "vocabulary file to check symbols against");
    normalize->add_flag("--report", norm_report, "print the transformation counters to stderr");
    normalize->footer(kFormulaFormat);

    std::string cls_formula;
    bool cls_normalize = false;
    auto* classify_cmd = app.add_subcommand("classify", "print the prefix class: Sigma m, Pi m or NotQNF");
    classify_cmd->add_option("-f,--formula", cls_formula, "formula file")->required();
    classify_cmd->add_flag("--normalize", cls_normalize, "classify the normal form instead of the sentence as given");
    classify_cmd->footer(kFormulaFormat);

    std::string exp_formula, exp_vocab;
    auto* expand = app.add_subcommand("expand-macros", "print the formula with every @macro expanded");
    expand->add_option("-f,--formula", exp_formula, "formula file")->required();
    expand->add_option("-v,--vocabulary", exp_vocab, "vocabulary file to check symbols against");
    expand->footer(std::string(kFormulaFormat) + "\nGenerated names start with '_'; read the output back with --allow-reserved.");

    std::string enc_structure;
    bool enc_length = false;
    auto* encode_cmd = app.add_subcommand("encode", "print the binary encoding bin(A) of a structure");
    encode_cmd->add_option("-s,--structure", enc_structure, "structure file")->required();
    encode_cmd->add_flag("--length", enc_length, "print only the length");
    encode_cmd->footer(std::string(kStructureFormat) +
                       "\n\nbin(A): the characteristic bit string of each relation in vocabulary order\n"
                       "(tuples in lexicographic order), then each constant in ceil(log n) bits.");

    MachineFlags mf;
    auto* run_cmd = app.add_subcommand("run-machine", "run a random-access machine; prints accept, reject or budget-exceeded");
    run_cmd->add_option("-m,--machine", mf.machine, "machine file")->required();
    auto* in_opt = run_cmd->add_option("-i,--input", mf.input, "file holding the input bits (0/1, whitespace ignored)");
    auto* st_opt = run_cmd->add_option("-s,--structure", mf.structure, "use bin(A) of this structure as input");
    in_opt->excludes(st_opt);
    run_cmd->add_option("--steps-c", mf.steps_c, "step budget is c * ceil(log N)^k");
    run_cmd->add_option("--steps-k", mf.steps_k, "exponent of the step budget");
    run_cmd->add_option("--steps", mf.steps, "fixed step budget, overriding --steps-c/--steps-k");
    run_cmd->add_option("--alts", mf.alts, "most existential/universal blocks on a path (default unlimited)");
    run_cmd->add_flag("--trace", mf.trace, "print the accepting path of a machine without universal states");
    run_cmd->footer(kMachineFormat);

    CompileFlags cf;
    auto* compile_cmd = app.add_subcommand("compile-machine", "compile a machine into an existential SO^plog sentence");
    add_compile_flags(compile_cmd, cf);
    compile_cmd->add_option("-v,--vocabulary", cf.vocab, "vocabulary of the input structures")->required();
    compile_cmd->add_option("--meta", cf.meta, "write the metadata sidecar to this file instead of stdout");
    compile_cmd->add_flag("--universal", cf.universal, "quantify the roster universally (no witness support)");
    compile_cmd->footer(std::string(kMachineFormat) + "\n\n" + kVocabularyFormat +
                        "\n\nOutput: the sentence, then (unless --meta) a line '--- metadata' and the sidecar:\n"
                        "'key = value' lines and one 'var NAME arity exponent role' line per quantified variable.");

    CompileFlags sf;
    EvalFlags sev;
    auto* sound = app.add_subcommand("check-soundness",
                                     "compare a machine run with its compiled sentence on one structure");
    add_compile_flags(sound, sf);
    sound->add_option("-s,--structure", sf.structure, "structure file")->required();
    sound->add_option("--budget", sev.budget, "most evaluation nodes per sentence check");
    sound->footer(std::string(kMachineFormat) + "\n\nThe report lists the machine verdict, whether a witness was extracted and\n"
                                                 "satisfies the sentence, and for rejected inputs how many enumerated paths\n"
                                                 "were checked. Exit 0 when machine and sentence agree.");

    std::vector<int> only;
    bool list = false;
    auto* selftest = app.add_subcommand("selftest", "run the desk-scale oracle suites; one PASS/FAIL line each");
    selftest->add_option("ids", only, "criteria to run (default: all)");
    selftest->add_flag("--list", list, "list the suites without running them");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*eval || *eval_w) {
            EvalFlags& f = *eval ? ev : ew;
            Structure s = load_structure_file(f.structure);
            Formula phi = load_formula(f.formula, common, &s.vocabulary());
            EvalStats stats;
            bool v;
            if (*eval) {
                v = evaluate(s, phi, {}, eval_options(f), &stats);
            } else {
                Witness w = from_file(f.witness, [](const std::string& t) { return parse_witness(t); });
                v = evaluate_with_witness(s, phi, w, {}, eval_options(f), &stats);
            }
            if (f.stats) print_stats(stats);
            return truth(v);
        }
        if (*normalize) {
            std::optional<Vocabulary> vocab;
            if (!norm_vocab.empty()) vocab = from_file(norm_vocab, [](const std::string& t) { return load_vocabulary(t); });
            Formula phi = load_formula(norm_formula, common, vocab ? &*vocab : nullptr);
            QnfReport r;
            Formula q = to_qnf(phi, &r);
            std::cout << print_formula(q) << "\n";
            if (norm_report)
                std::cerr << "class = " << to_string(classify(q)) << "\nexists_swaps = " << r.exists_swaps
                          << "\nforall_swaps = " << r.forall_swaps << "\nmerge_penalty = " << r.merge_penalty
                          << "\nblocks_before = " << r.blocks_before << "\nblocks_after = " << r.blocks_after
                          << "\nrenamed = " << r.renamed << "\n";
            return kTrue;
        }
        if (*classify_cmd) {
            Formula phi = load_formula(cls_formula, common, nullptr);
            std::cout << to_string(classify(cls_normalize ? to_qnf(phi) : phi)) << "\n";
            return kTrue;
        }
        if (*expand) {
            std::optional<Vocabulary> vocab;
            if (!exp_vocab.empty()) vocab = from_file(exp_vocab, [](const std::string& t) { return load_vocabulary(t); });
            std::cout << print_formula(load_formula(exp_formula, common, vocab ? &*vocab : nullptr)) << "\n";
            return kTrue;
        }
        if (*encode_cmd) {
            BitString b = encode(load_structure_file(enc_structure));
            if (enc_length) std::cout << b.size() << "\n";
            else std::cout << b.str() << "\n";
            return kTrue;
        }
        if (*run_cmd) {
            if (mf.input.empty() == mf.structure.empty()) throw UsageError("run-machine needs exactly one of -i or -s");
            MachineDesc m = from_file(mf.machine, [](const std::string& t) { return parse_machine(t); });
            BitString input = mf.structure.empty()
                                  ? from_file(mf.input, [](const std::string& t) { return BitString::parse(t); })
                                  : encode(load_structure_file(mf.structure));
            RunConfig rc;
            rc.step_c = mf.steps_c;
            rc.step_k = mf.steps_k;
            rc.step_budget = mf.steps;
            rc.max_alternations = mf.alts;
            rc.trace_level = mf.trace ? 1 : 0;
            RunResult r = run(m, input, rc);
            std::cout << to_string(r.outcome) << "\n"
                      << "input_bits = " << input.size() << "\nstep_budget = " << rc.budget_for(input.size())
                      << "\nsteps_used = " << r.steps_used << "\nalternations_used = " << r.alternations_used
                      << "\nbranches_explored = " << r.branches_explored << "\ntotal_steps = " << r.total_steps << "\n";
            if (!r.budget_reason.empty()) std::cout << "budget_reason = " << r.budget_reason << "\n";
            if (mf.trace)
                for (std::size_t i = 0; i < r.trace.size(); ++i) {
                    const auto& c = r.trace[i];
                    std::cout << "trace " << i << " " << m.states[static_cast<std::size_t>(c.state)] << " addr=" << c.addr
                              << " read=" << c.input;
                    for (std::size_t t = 0; t < c.work.size(); ++t) std::cout << " w" << t << "=" << c.work[t] << "@" << c.heads[t];
                    std::cout << "\n";
                }
            if (r.outcome == Outcome::BudgetExceeded) return kBudget;
            return r.accepted() ? kTrue : kFalse;
        }
        if (*compile_cmd) {
            Vocabulary vocab = from_file(cf.vocab, [](const std::string& t) { return load_vocabulary(t); });
            auto c = compile(cf, vocab);
            std::cout << print_formula(c.sentence) << "\n";
            std::string meta = fagin::format_metadata(c);
            if (cf.meta.empty()) {
                std::cout << "--- metadata\n" << meta;
            } else {
                std::ofstream out(cf.meta);
                if (!out) throw UsageError("cannot write '" + cf.meta + "'");
                out << meta;
            }
            return kTrue;
        }
        if (*sound) {
            Structure s = load_structure_file(sf.structure);
            auto c = compile(sf, s.vocabulary());
            fagin::check_parameters(c, s.size());
            EvalOptions o;
            o.budget.max_total_nodes = sev.budget;
            auto r = fagin::check_soundness(c, s, o);
            std::cout << fagin::format_report(r);
            return r.agrees() ? kTrue : kFalse;
        }
        if (*selftest) {
            std::set<int> wanted(only.begin(), only.end());
            acceptance::Options o;
            o.threads = common.threads;
            int failed = 0;
            for (const auto& c : acceptance::criteria()) {
                if (!wanted.empty() && !wanted.count(c.id)) continue;
                if (list) {
                    std::cout << c.id << " " << c.name << "\n";
                    continue;
                }
                auto r = acceptance::run_criterion(c, o);
                std::cout << acceptance::format_result(r) << std::endl;
                failed += !r.pass;
            }
            return failed ? kFalse : kTrue;
        }
    } catch (const BudgetExceeded& e) {
        std::cerr << "soplog: " << e.what() << "\n";
        return kBudget;
    } catch (const UsageError& e) {
        std::cerr << "soplog: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "soplog: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

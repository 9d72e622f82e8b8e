#include "soplog/error.hpp"
#include "soplog/fagin.hpp"
#include "soplog/machine.hpp"
#include "soplog/normalform.hpp"
#include "soplog/semantics.hpp"
#include "soplog/structure.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace soplog;

namespace {

Strategy strategy_from(const std::string& s) {
    if (s == "auto") return Strategy::Auto;
    if (s == "enumerate") return Strategy::Enumerate;
    if (s == "sat") return Strategy::PreferSat;
    throw py::value_error("strategy must be 'auto', 'enumerate' or 'sat'");
}

EvalOptions eval_options(const std::string& strategy, std::uint64_t budget) {
    EvalOptions o;
    o.strategy = strategy_from(strategy);
    o.budget.max_total_nodes = budget;
    return o;
}

py::dict report_dict(const fagin::SoundnessReport& r) {
    py::dict d;
    d["machine"] = to_string(r.machine);
    d["witness_found"] = r.witness_found;
    d["witness_checks"] = r.witness_checks;
    d["paths_checked"] = r.paths_checked;
    d["paths_satisfying"] = r.paths_satisfying;
    d["refuted"] = r.refuted();
    d["agrees"] = r.agrees();
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "SO^plog evaluation, normal forms, random-access machines and the machine-to-sentence compiler";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<BudgetExceeded>(m, "BudgetExceeded", base.ptr());

    py::class_<Vocabulary>(m, "Vocabulary")
        .def(py::init<>())
        .def("add_relation", &Vocabulary::add_relation, py::arg("name"), py::arg("arity"))
        .def("add_constant", &Vocabulary::add_constant, py::arg("name"))
        .def_property_readonly("relations",
                               [](const Vocabulary& v) {
                                   std::vector<std::pair<std::string, int>> out;
                                   for (const auto& r : v.relations()) out.emplace_back(r.name, r.arity);
                                   return out;
                               })
        .def_property_readonly("constants", &Vocabulary::constants)
        .def("__str__", &format_vocabulary);

    py::class_<Structure>(m, "Structure")
        .def_property_readonly("size", &Structure::size)
        .def_property_readonly("vocabulary", &Structure::vocabulary)
        .def("relation", [](const Structure& s, const std::string& name) { return s.relation(name).tuples(); })
        .def("constant", [](const Structure& s, const std::string& name) { return s.constant(name); })
        .def("__str__", &format_structure);

    py::class_<Formula>(m, "Formula")
        .def("__str__", [](const Formula& f) { return print_formula(f); })
        .def("__eq__", [](const Formula& a, const Formula& b) { return a == b; })
        .def_property_readonly("size", [](const Formula& f) { return formula_size(f); })
        .def_property_readonly("depth", [](const Formula& f) { return quantifier_depth(f); });

    py::class_<MachineDesc>(m, "Machine")
        .def_property_readonly("states", [](const MachineDesc& d) { return d.states; })
        .def_property_readonly("tapes", [](const MachineDesc& d) { return d.tapes; })
        .def("__str__", &format_machine);

    m.def("load_structure", [](const std::string& text) { return load_structure(text); }, py::arg("text"));
    m.def("load_vocabulary", [](const std::string& text) { return load_vocabulary(text); }, py::arg("text"));
    m.def(
        "parse_formula",
        [](const std::string& text, const Vocabulary* vocab, bool allow_reserved) {
            ParseOptions o;
            o.vocab = vocab;
            o.allow_reserved = allow_reserved;
            return parse_formula(text, o);
        },
        py::arg("text"), py::arg("vocabulary") = nullptr, py::arg("allow_reserved") = false);
    m.def("encode", [](const Structure& s) { return encode(s).str(); }, py::arg("structure"));
    m.def("encoded_length", &encoded_length, py::arg("vocabulary"), py::arg("n"));

    m.def(
        "evaluate",
        [](const Structure& s, const Formula& f, const std::string& strategy, std::uint64_t budget) {
            py::gil_scoped_release release;
            return evaluate(s, f, {}, eval_options(strategy, budget));
        },
        py::arg("structure"), py::arg("formula"), py::arg("strategy") = "auto",
        py::arg("budget") = EvalBudget{}.max_total_nodes);
    m.def(
        "evaluate_with_witness",
        [](const Structure& s, const Formula& f, const std::string& witness, const std::string& strategy,
           std::uint64_t budget) {
            Witness w = parse_witness(witness);
            py::gil_scoped_release release;
            return evaluate_with_witness(s, f, w, {}, eval_options(strategy, budget));
        },
        py::arg("structure"), py::arg("formula"), py::arg("witness"), py::arg("strategy") = "auto",
        py::arg("budget") = EvalBudget{}.max_total_nodes);
    m.def("reference_evaluate", [](const Structure& s, const Formula& f) { return reference_evaluate(s, f); },
          py::arg("structure"), py::arg("formula"));

    m.def("to_qnf", [](const Formula& f) { return to_qnf(f); }, py::arg("formula"));
    m.def("classify", [](const Formula& f) { return to_string(classify(f)); }, py::arg("formula"));

    m.def("parse_machine", [](const std::string& text) { return parse_machine(text); }, py::arg("text"));
    m.def("bit0_reader", &bit0_reader);
    m.def("exists_one_guesser", &exists_one_guesser);
    m.def("alternating_blocks", &alternating_blocks, py::arg("m"));
    m.def("polylog_cnf_sat_machine", &polylog_cnf_sat_machine, py::arg("k"));
    m.def("encode_cnf", [](const CnfFormula& f, int k) { return encode_cnf(f, k).str(); }, py::arg("clauses"),
          py::arg("k"));
    m.def(
        "run_machine",
        [](const MachineDesc& md, const std::string& bits, std::uint64_t steps_c, int steps_k,
           std::optional<std::uint64_t> steps, int alts) {
            RunConfig rc;
            rc.step_c = steps_c;
            rc.step_k = steps_k;
            rc.step_budget = steps;
            rc.max_alternations = alts;
            BitString input = BitString::parse(bits);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run(md, input, rc);
            }
            py::dict d;
            d["outcome"] = to_string(r.outcome);
            d["steps_used"] = r.steps_used;
            d["alternations_used"] = r.alternations_used;
            d["branches_explored"] = r.branches_explored;
            return d;
        },
        py::arg("machine"), py::arg("bits"), py::arg("steps_c") = 1, py::arg("steps_k") = 1,
        py::arg("steps") = std::nullopt, py::arg("alts") = -1);

    m.def(
        "compile_machine",
        [](const MachineDesc& md, const Vocabulary& vocab, int k, int k_addr) {
            fagin::CompileOptions o;
            o.k = k;
            o.k_addr = k_addr;
            auto c = fagin::compile_machine(md, vocab, o);
            return py::make_tuple(c.sentence, fagin::format_metadata(c));
        },
        py::arg("machine"), py::arg("vocabulary"), py::arg("k") = fagin::CompileOptions{}.k,
        py::arg("k_addr") = fagin::CompileOptions{}.k_addr);
    m.def(
        "check_soundness",
        [](const MachineDesc& md, const Structure& s, int k, int k_addr) {
            fagin::CompileOptions o;
            o.k = k;
            o.k_addr = k_addr;
            auto c = fagin::compile_machine(md, s.vocabulary(), o);
            fagin::SoundnessReport r;
            {
                py::gil_scoped_release release;
                r = fagin::check_soundness(c, s);
            }
            return report_dict(r);
        },
        py::arg("machine"), py::arg("structure"), py::arg("k") = fagin::CompileOptions{}.k,
        py::arg("k_addr") = fagin::CompileOptions{}.k_addr);
}

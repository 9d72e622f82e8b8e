#include "CLI11.hpp"
#include "criteria.hpp"

#include <iostream>
#include <set>

int main(int argc, char** argv) {
    CLI::App app{"Runs the acceptance criteria and prints one PASS/FAIL line each"};
    acceptance::Options opts;
    std::vector<int> only;
    app.add_option("--threads", opts.threads, "worker threads (0: all cores)");
    app.add_option("ids", only, "criteria to run (default: all)");
    CLI11_PARSE(app, argc, argv);

    std::set<int> wanted(only.begin(), only.end());
    int failed = 0;
    for (const auto& c : acceptance::criteria()) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        auto r = acceptance::run_criterion(c, opts);
        std::cout << acceptance::format_result(r) << std::endl;
        failed += !r.pass;
    }
    return failed ? 1 : 0;
}

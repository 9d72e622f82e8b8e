#pragma once

#include <functional>
#include <string>
#include <vector>

// Desk-scale acceptance suites. Each criterion runs against test-only oracles
// and reports a single verdict.
namespace acceptance {

struct Result {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
    double limit_seconds = 0; // 0: no time limit
};

struct Options {
    unsigned threads = 0; // 0: hardware concurrency
};

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;
    std::function<Result(const Options&)> run;
};

const std::vector<Criterion>& criteria();

// Runs one criterion and applies its time limit.
Result run_criterion(const Criterion& c, const Options& opts);
std::string format_result(const Result& r);

} // namespace acceptance

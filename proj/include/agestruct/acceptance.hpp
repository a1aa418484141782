#pragma once

#include <string>
#include <vector>

namespace agestruct::acceptance {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Result {
    int id = 0;
    std::string title;
    std::vector<Check> checks;
    double seconds = 0.0;

    bool pass() const;
};

const std::vector<int>& criteria();

// Runs one criterion. With `only` non-empty, only the named checks are kept.
Result run(int id, const std::vector<std::string>& only = {});

// "[PASS] 3 fixed-point aggregate (0.01 s): converged=... | ..."
std::string format_line(const Result& result);

}  // namespace agestruct::acceptance

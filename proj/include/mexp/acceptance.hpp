#pragma once

#include <string>
#include <vector>

namespace mexp {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Criteria are numbered 1 to 10; each carries its own pinned tolerances and runtime budget.
CriterionResult run_criterion(int id);

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids);

/// "PASS criterion N (name): detail [t s]".
std::string format_result(const CriterionResult& r);

}  // namespace mexp

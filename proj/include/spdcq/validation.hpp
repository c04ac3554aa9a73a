#pragma once

#include <string>
#include <vector>

#include "spdcq/types.hpp"

namespace spdcq {

struct ValidationIssue {
    std::string code;     // stable machine-readable identifier
    std::string message;  // human-readable detail
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool clean() const { return issues.empty(); }
    std::string summary() const;
};

/// Collects every contract violation in one pass: grid mismatches,
/// non-positive leakage rates, empty mode lists, non-finite values, malformed
/// angular grids. Downstream operations require a clean report and fail fast
/// on a dirty one.
ValidationReport validate_scenario(const Scenario& scenario);

/// Throws DataError with the report summary unless the scenario is clean.
void require_valid(const Scenario& scenario);

}  // namespace spdcq

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <decswitch/model.hpp>
#include <decswitch/solver.hpp>

namespace decswitch::cli {

enum class CheckStatus { pass, fail, skip };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::skip;
  std::string detail;
};

struct ValidateOptions {
  std::uint64_t runs = 20000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

/// Invariant battery behind `decswitch validate`.
std::vector<CheckResult> validate_checks(const ProblemSpec& spec, const SolutionBundle& bundle,
                                         const ValidateOptions& options);

std::string to_string(CheckStatus status);

/// Largest |a - b| over matching entries of two P tables; used by the
/// p1 = 1 reduction check.
double centralized_mismatch(const ProblemSpec& spec, const SolutionBundle& bundle);

/// Largest |empty - m1| difference of P, K and Ptilde; requires kappa1 == 1.
double kappa1_collapse_mismatch(const ProblemSpec& spec, const SolutionBundle& bundle);

}  // namespace decswitch::cli

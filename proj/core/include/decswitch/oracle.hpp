#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "decswitch/control.hpp"
#include "decswitch/model.hpp"
#include "decswitch/solver.hpp"

namespace decswitch {

/// Second moment E[xi_bar xi_bar'] of the closed loop along one sequence
/// prefix, with xi_bar = (x0, x1, x_hat1, 1).
struct ScenarioMoment {
  Matrix Sigma;
  double prob = 1.0;
};

/// Affine closed-loop maps of one stage, over xi_bar.
struct ClosedLoopStage {
  Matrix F;      // xi_bar_{t+1} = F xi_bar_t + G w_t
  Matrix G;      // dim(xi_bar) x d_x
  Matrix Theta;  // u_t = Theta xi_bar_t
  Matrix M;      // stage cost = xi_bar' M xi_bar
};

ClosedLoopStage build_closed_loop(const ProblemSpec& spec, const LinearPolicy& policy, int t, int m0, int m1,
                                  int gamma_t, int gamma_next);

/// Largest number of sequences the exact evaluator will enumerate.
inline constexpr double kSequenceLimit = 1e6;

/// (2 kappa0 kappa1)^(T+1).
double sequence_count(const ProblemSpec& spec);

/// Throws ScaleGuardError when sequence_count(spec) exceeds the limit.
void check_scale_guard(const ProblemSpec& spec);

/// E[V_0] of a linear policy by enumerating every mode and channel sequence.
/// The result does not depend on `threads`.
double exact_expected_cost(const ProblemSpec& spec, const LinearPolicy& policy, unsigned threads = 0);

/// Sum of all enumerated sequence probabilities; 1 up to rounding.
double total_sequence_probability(const ProblemSpec& spec);

struct StationarityOptions {
  double eps = 1e-4;
  int perturbations = 20;
  double perturbation_norm = 1e-3;
  /// Number of gain entries probed by finite differences; 0 probes all.
  int max_entries = 0;
  std::uint64_t seed = 1;
  /// Throw OptimalityViolation instead of returning a failed report.
  bool throw_on_violation = false;
  unsigned threads = 0;
};

struct StationarityReport {
  double cost = 0.0;
  double max_abs_gradient = 0.0;
  std::string worst_entry;
  double gradient_tolerance = 0.0;
  int entries_checked = 0;
  /// Smallest cost change among the random perturbations.
  double min_perturbation_delta = 0.0;
  bool passed = true;
};

/// Finite-difference and random-perturbation test that `gains` is a local
/// minimizer of the exact cost within the optimal policy structure.
StationarityReport stationarity_check(const ProblemSpec& spec, const GainTables& gains,
                                      const StationarityOptions& options = {});

struct OracleReport {
  std::string policy;
  double exact_cost = 0.0;
  double j_star = 0.0;
  std::optional<StationarityReport> stationarity;

  double abs_diff() const;
  double rel_diff() const;
};

std::string oracle_report_json(const OracleReport& report, int indent = 2);

}  // namespace decswitch

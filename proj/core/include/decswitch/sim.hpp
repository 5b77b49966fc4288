#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "decswitch/control.hpp"
#include "decswitch/model.hpp"
#include "decswitch/solver.hpp"

namespace decswitch {

/// Per-run random stream. Each (seed, run_index) pair maps to an independent
/// engine, so results do not depend on how runs are spread over threads.
class RunStream {
 public:
  RunStream(std::uint64_t seed, std::uint64_t run_index);

  double uniform();
  double normal();
  int categorical(const std::vector<double>& probabilities);
  int bernoulli(double p);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Zero-mean draw with covariance `cov`. Gaussian draws use an eigenvalue
/// factor of cov with negative eigenvalues clamped at 0; the zero family
/// returns 0. Throws DefinitenessError if min eig(cov) < -1e-12.
Vector sample_noise(const Matrix& cov, NoiseFamily family, RunStream& rng);

/// Precomputed square-root factor for repeated draws from one covariance.
class NoiseFactor {
 public:
  NoiseFactor() = default;
  NoiseFactor(const Matrix& cov, NoiseFamily family);
  Vector draw(RunStream& rng) const;

 private:
  Matrix root_;
  bool zero_ = true;
};

struct TrajectoryStep {
  int t = 0;
  Vector x0, x1;
  int m0 = 0, m1 = 0;
  int gamma = 0;
  Vector u0, u1;
  Vector x_hat1;
  double stage_cost = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double total_cost = 0.0;
};

/// A policy ready to run in closed loop. The optimal policy runs through the
/// prescription and estimator functions; the others through their linear laws.
class ClosedLoopController {
 public:
  ClosedLoopController(const ProblemSpec& spec, const SolutionBundle& bundle, PolicyKind kind);

  PolicyKind kind() const { return kind_; }
  const ProblemSpec& spec() const { return *spec_; }
  const SolutionBundle& bundle() const { return *bundle_; }
  const LinearPolicy& linear() const { return linear_; }

 private:
  const ProblemSpec* spec_;
  const SolutionBundle* bundle_;
  PolicyKind kind_;
  LinearPolicy linear_;
};

/// One closed-loop rollout, deterministic in (seed, run_index). Draw order:
/// x0_0, x1_0, then per step m0, m1, gamma, w0, w1.
/// Throws NonFiniteError if the state blows up.
Trajectory simulate_run(const ClosedLoopController& controller, std::uint64_t seed, std::uint64_t run_index);

struct McReport {
  std::string policy;
  std::uint64_t runs = 0;
  std::uint64_t seed = 0;
  double mean_cost = 0.0;
  double std_err = 0.0;
};

/// Order-independent pairwise sum.
double pairwise_sum(const double* data, std::size_t n);

/// Number of worker threads from DECSWITCH_THREADS, else hardware concurrency.
unsigned default_threads();

/// Mean and standard error of the total cost over `runs` independent rollouts.
/// The report is identical for any `threads` value.
McReport monte_carlo(const ClosedLoopController& controller, std::uint64_t runs, std::uint64_t seed,
                     unsigned threads = 0);

/// Per-t sample mean and standard error of x1_t - x_hat1_t.
struct EstimatorBias {
  std::vector<Vector> mean;
  std::vector<Vector> std_err;
};

EstimatorBias estimator_bias(const ClosedLoopController& controller, std::uint64_t runs, std::uint64_t seed,
                             unsigned threads = 0);

/// CSV with columns t, x0[i]..., x1[i]..., m0, m1, gamma, u0[i]..., u1[i]...,
/// xhat[i]..., stage_cost. Modes are written 1-based.
std::string trajectory_csv(const Trajectory& trajectory, const Dims& dims);

}  // namespace decswitch

#pragma once

#include <cstdint>
#include <vector>

#include "decswitch/model.hpp"

namespace decswitch::instances {

/// Scalar plants, one mode each, Q = R = I, T = 0.
/// Initial means (1, 2), initial variances (0.5, 0.25), unit noise.
ProblemSpec s1(double p1 = 0.5);

/// Scalar plants, one mode each, every system block equal to 1, Q = R = I,
/// T = 1, zero initial means, unit initial and noise variances.
ProblemSpec s2(double p1 = 0.5);

struct RandomOptions {
  int max_block_dim = 2;
  int max_kappa = 2;
  int max_horizon = 3;
  std::vector<double> p1_values{0.0, 0.3, 0.7, 1.0};
  double system_scale = 0.6;  // std-dev of random system entries
};

/// Randomized instance: block dims in [1, max_block_dim], kappa in
/// [1, max_kappa], T in [0, max_horizon], p1 drawn from p1_values, random
/// Q PSD, R PD, PSD noise/initial covariances and nonzero initial means.
ProblemSpec random_instance(std::uint64_t seed, const RandomOptions& opts = {});

/// `count` instances from consecutive seeds; p1 cycles through
/// opts.p1_values so every value is represented.
std::vector<ProblemSpec> random_battery(std::size_t count, std::uint64_t seed, const RandomOptions& opts = {});

/// Copy with the channel success probability replaced.
ProblemSpec with_p1(ProblemSpec spec, double p1);

}  // namespace decswitch::instances

#include "decswitch/instances.hpp"

#include <random>

namespace decswitch::instances {

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

ProblemSpec scalar_skeleton(double p1, int T) {
  ProblemSpec spec;
  spec.dims = {1, 1, 1, 1};
  spec.modes = {1, 1, {1.0}, {1.0}};
  spec.channel.p1 = p1;
  spec.system.A00 = {scalar(1.0)};
  spec.system.B00 = {scalar(1.0)};
  spec.system.A10 = PairTable<Matrix>(1, 1, scalar(1.0));
  spec.system.A11 = PairTable<Matrix>(1, 1, scalar(1.0));
  spec.system.B10 = PairTable<Matrix>(1, 1, scalar(1.0));
  spec.system.B11 = PairTable<Matrix>(1, 1, scalar(1.0));
  spec.cost.Q = {PairTable<Matrix>(1, 1, Matrix::Identity(2, 2))};
  spec.cost.R = {PairTable<Matrix>(1, 1, Matrix::Identity(2, 2))};
  spec.stoch.T = T;
  spec.stoch.covW0 = {scalar(1.0)};
  spec.stoch.covW1 = {scalar(1.0)};
  return spec;
}

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) M(r, c) = n(rng);
  }
  return M;
}

// G G' with a random rank between 0 and n (rank-deficient matrices included).
Matrix random_psd(std::mt19937_64& rng, int n, double scale, bool allow_deficient) {
  std::uniform_int_distribution<int> rank_draw(allow_deficient ? 0 : n, n);
  const int rank = rank_draw(rng);
  if (rank == 0) return Matrix::Zero(n, n);
  const Matrix G = random_matrix(rng, n, rank, scale);
  return matkit::symmetrize(G * G.transpose());
}

Matrix random_pd(std::mt19937_64& rng, int n, double floor) {
  return matkit::symmetrize(random_psd(rng, n, 0.7, false) + floor * Matrix::Identity(n, n));
}

std::vector<double> random_distribution(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> p(static_cast<std::size_t>(k));
  double total = 0.0;
  for (double& v : p) total += (v = u(rng));
  for (double& v : p) v /= total;
  // Put the rounding residue on the last entry so the sum is 1 to the ulp.
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) head += p[i];
  p.back() = 1.0 - head;
  return p;
}

}  // namespace

ProblemSpec s1(double p1) {
  ProblemSpec spec = scalar_skeleton(p1, 0);
  spec.stoch.mu_x0 = Vector::Constant(1, 1.0);
  spec.stoch.mu_x1 = Vector::Constant(1, 2.0);
  spec.stoch.cov_x0 = scalar(0.5);
  spec.stoch.cov_x1 = scalar(0.25);
  validate_problem(spec);
  return spec;
}

ProblemSpec s2(double p1) {
  ProblemSpec spec = scalar_skeleton(p1, 1);
  spec.stoch.mu_x0 = Vector::Zero(1);
  spec.stoch.mu_x1 = Vector::Zero(1);
  spec.stoch.cov_x0 = scalar(1.0);
  spec.stoch.cov_x1 = scalar(1.0);
  validate_problem(spec);
  return spec;
}

ProblemSpec random_instance(std::uint64_t seed, const RandomOptions& opts) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, opts.max_block_dim);
  std::uniform_int_distribution<int> kappa(1, opts.max_kappa);
  std::uniform_int_distribution<int> horizon(0, opts.max_horizon);
  std::uniform_int_distribution<std::size_t> p1_pick(0, opts.p1_values.size() - 1);
  std::bernoulli_distribution coin(0.5);

  ProblemSpec spec;
  spec.dims = {dim(rng), dim(rng), dim(rng), dim(rng)};
  spec.modes.kappa0 = kappa(rng);
  spec.modes.kappa1 = kappa(rng);
  spec.modes.pi_m0 = random_distribution(rng, spec.modes.kappa0);
  spec.modes.pi_m1 = random_distribution(rng, spec.modes.kappa1);
  spec.channel.p1 = opts.p1_values[p1_pick(rng)];

  const Dims& d = spec.dims;
  const double s = opts.system_scale;
  for (int m0 = 0; m0 < spec.modes.kappa0; ++m0) {
    spec.system.A00.push_back(random_matrix(rng, d.d_x0, d.d_x0, s));
    spec.system.B00.push_back(random_matrix(rng, d.d_x0, d.d_u0, s));
  }
  const int k0 = spec.modes.kappa0;
  const int k1 = spec.modes.kappa1;
  spec.system.A10 = PairTable<Matrix>(k0, k1);
  spec.system.A11 = PairTable<Matrix>(k0, k1);
  spec.system.B10 = PairTable<Matrix>(k0, k1);
  spec.system.B11 = PairTable<Matrix>(k0, k1);
  for (int m0 = 0; m0 < k0; ++m0) {
    for (int m1 = 0; m1 < k1; ++m1) {
      spec.system.A10.at(m0, m1) = random_matrix(rng, d.d_x1, d.d_x0, s);
      spec.system.A11.at(m0, m1) = random_matrix(rng, d.d_x1, d.d_x1, s);
      spec.system.B10.at(m0, m1) = random_matrix(rng, d.d_x1, d.d_u0, s);
      spec.system.B11.at(m0, m1) = random_matrix(rng, d.d_x1, d.d_u1, s);
    }
  }

  spec.stoch.T = horizon(rng);
  spec.cost.time_varying = coin(rng);
  const int slices = spec.cost.time_varying ? spec.stoch.T + 1 : 1;
  for (int t = 0; t < slices; ++t) {
    PairTable<Matrix> Q(k0, k1), R(k0, k1);
    for (int m0 = 0; m0 < k0; ++m0) {
      for (int m1 = 0; m1 < k1; ++m1) {
        Q.at(m0, m1) = random_psd(rng, d.dx(), 0.8, true);
        R.at(m0, m1) = random_pd(rng, d.du(), 0.3);
      }
    }
    spec.cost.Q.push_back(std::move(Q));
    spec.cost.R.push_back(std::move(R));
  }

  const int noise_slices = coin(rng) ? spec.stoch.T + 1 : 1;
  for (int t = 0; t < noise_slices; ++t) {
    spec.stoch.covW0.push_back(random_psd(rng, d.d_x0, 0.5, true));
    spec.stoch.covW1.push_back(random_psd(rng, d.d_x1, 0.5, true));
  }
  spec.stoch.mu_x0 = random_matrix(rng, d.d_x0, 1, 1.0);
  spec.stoch.mu_x1 = random_matrix(rng, d.d_x1, 1, 1.0);
  spec.stoch.cov_x0 = random_psd(rng, d.d_x0, 0.6, true);
  spec.stoch.cov_x1 = random_psd(rng, d.d_x1, 0.6, true);
  validate_problem(spec);
  return spec;
}

std::vector<ProblemSpec> random_battery(std::size_t count, std::uint64_t seed, const RandomOptions& opts) {
  std::vector<ProblemSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ProblemSpec spec = random_instance(seed + i, opts);
    if (!opts.p1_values.empty()) spec.channel.p1 = opts.p1_values[i % opts.p1_values.size()];
    out.push_back(std::move(spec));
  }
  return out;
}

ProblemSpec with_p1(ProblemSpec spec, double p1) {
  spec.channel.p1 = p1;
  validate_problem(spec);
  return spec;
}

}  // namespace decswitch::instances

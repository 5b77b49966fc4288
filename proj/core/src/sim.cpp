#include "decswitch/sim.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace decswitch {

RunStream::RunStream(std::uint64_t seed, std::uint64_t run_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run_index), static_cast<std::uint32_t>(run_index >> 32)};
  engine_.seed(seq);
}

double RunStream::uniform() { return std::generate_canonical<double, 53>(engine_); }

double RunStream::normal() { return normal_(engine_); }

int RunStream::categorical(const std::vector<double>& probabilities) {
  const double u = uniform();
  double cumulative = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cumulative += probabilities[i];
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

int RunStream::bernoulli(double p) { return uniform() < p ? 1 : 0; }

NoiseFactor::NoiseFactor(const Matrix& cov, NoiseFamily family) {
  zero_ = family == NoiseFamily::zero || cov.size() == 0 || cov.cwiseAbs().maxCoeff() == 0.0;
  if (zero_) {
    root_ = Matrix::Zero(cov.rows(), cov.cols());
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(matkit::symmetrize(cov));
  const Vector& lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-12) {
    throw DefinitenessError("noise covariance is not positive semi-definite", lambda.minCoeff());
  }
  root_ = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector NoiseFactor::draw(RunStream& rng) const {
  if (zero_) return Vector::Zero(root_.rows());
  Vector z(root_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return root_ * z;
}

Vector sample_noise(const Matrix& cov, NoiseFamily family, RunStream& rng) {
  return NoiseFactor(cov, family).draw(rng);
}

ClosedLoopController::ClosedLoopController(const ProblemSpec& spec, const SolutionBundle& bundle, PolicyKind kind)
    : spec_(&spec), bundle_(&bundle), kind_(kind), linear_(make_policy(kind, spec, bundle)) {}

namespace {

// Everything a rollout reads that does not change between runs.
struct RolloutPlan {
  std::vector<NoiseFactor> w0, w1;
  NoiseFactor x0, x1;
  PairTable<AssembledSystem> systems;
  std::vector<Matrix> predictions;  // (t, m0, m1, gamma), linear policies only

  const Matrix& prediction(const ProblemSpec& spec, int t, int m0, int m1, int gamma) const {
    return predictions[static_cast<std::size_t>(((t * spec.kappa0() + m0) * spec.kappa1() + m1) * 2 + gamma)];
  }
};

RolloutPlan make_plan(const ClosedLoopController& controller) {
  const ProblemSpec& spec = controller.spec();
  RolloutPlan plan;
  for (int t = 0; t <= spec.horizon(); ++t) {
    plan.w0.emplace_back(spec.noise_cov0(t), spec.stoch.family);
    plan.w1.emplace_back(spec.noise_cov1(t), spec.stoch.family);
  }
  plan.x0 = NoiseFactor(spec.init_cov0(), spec.stoch.family);
  plan.x1 = NoiseFactor(spec.init_cov1(), spec.stoch.family);
  plan.systems = PairTable<AssembledSystem>(spec.kappa0(), spec.kappa1());
  for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
    for (int m1 = 0; m1 < spec.kappa1(); ++m1) plan.systems.at(m0, m1) = assemble_system(spec, m0, m1);
  }
  if (controller.kind() != PolicyKind::optimal) {
    for (int t = 0; t <= spec.horizon(); ++t) {
      for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
        for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
          for (int gamma = 0; gamma < 2; ++gamma) {
            plan.predictions.push_back(prediction_map(spec, controller.linear(), t, m0, m1, gamma));
          }
        }
      }
    }
  }
  return plan;
}

Trajectory rollout(const ClosedLoopController& controller, const RolloutPlan& plan, std::uint64_t seed,
                   std::uint64_t run_index) {
  const ProblemSpec& spec = controller.spec();
  const Dims& d = spec.dims;
  const bool optimal = controller.kind() == PolicyKind::optimal;
  RunStream rng(seed, run_index);

  Vector x0 = spec.stoch.mu_x0 + plan.x0.draw(rng);
  Vector x1 = spec.stoch.mu_x1 + plan.x1.draw(rng);

  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(spec.horizon() + 1));
  EstimatorState est;
  Vector predicted;  // E[X^1_t | common info] before z_t arrives
  Prescription last_presc;
  ZTilde last_ztilde = ZTilde::empty();
  Vector last_x0;
  int last_m0 = 0;

  for (int t = 0; t <= spec.horizon(); ++t) {
    const int m0 = rng.categorical(spec.modes.pi_m0);
    const int m1 = rng.categorical(spec.modes.pi_m1);
    const int gamma = rng.bernoulli(spec.channel.p1);
    const Vector w0 = plan.w0[static_cast<std::size_t>(t)].draw(rng);
    const Vector w1 = plan.w1[static_cast<std::size_t>(t)].draw(rng);

    const Observation obs = observe(x0, m0, x1, m1, gamma);
    Vector u0, u1;
    if (optimal) {
      est = t == 0 ? estimator_init(spec, obs)
                   : estimator_update(spec, est, last_x0, last_m0, last_ztilde, last_presc, obs.z);
      last_presc = compute_prescription(spec, controller.bundle().gains, t, m0, obs.ztilde, x0, est);
      u0 = last_presc.u0;
      u1 = local_action(last_presc, x1, m1, est);
    } else {
      est.x_hat1 = gamma ? x1 : (t == 0 ? spec.stoch.mu_x1 : predicted);
      const Actions a = controller.linear().act(t, m0, m1, gamma, x0, x1, est.x_hat1);
      u0 = a.u0;
      u1 = a.u1;
      Vector xi(d.d_x0 + 2 * d.d_x1);
      xi << x0, x1, est.x_hat1;
      predicted = plan.prediction(spec, t, m0, m1, gamma) * xi;
    }

    Vector x(d.dx()), u(d.du());
    x << x0, x1;
    u << u0, u1;
    if (!u.allFinite()) throw NonFiniteError(t, run_index);

    TrajectoryStep step;
    step.t = t;
    step.x0 = x0;
    step.x1 = x1;
    step.m0 = m0;
    step.m1 = m1;
    step.gamma = gamma;
    step.u0 = u0;
    step.u1 = u1;
    step.x_hat1 = est.x_hat1;
    step.stage_cost = matkit::qf(spec.Q(t, m0, m1), x) + matkit::qf(spec.R(t, m0, m1), u);
    traj.total_cost += step.stage_cost;
    traj.steps.push_back(std::move(step));

    const AssembledSystem& sys = plan.systems.at(m0, m1);
    const Vector next = sys.A * x + sys.B * u;
    last_x0 = x0;
    last_m0 = m0;
    last_ztilde = obs.ztilde;
    x0 = next.head(d.d_x0) + w0;
    x1 = next.tail(d.d_x1) + w1;
    if (!x0.allFinite() || !x1.allFinite()) throw NonFiniteError(t + 1, run_index);
  }
  return traj;
}

}  // namespace

Trajectory simulate_run(const ClosedLoopController& controller, std::uint64_t seed, std::uint64_t run_index) {
  return rollout(controller, make_plan(controller), seed, run_index);
}

double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

unsigned default_threads() {
  if (const char* env = std::getenv("DECSWITCH_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

McReport monte_carlo(const ClosedLoopController& controller, std::uint64_t runs, std::uint64_t seed,
                     unsigned threads) {
  if (runs < 1) throw std::invalid_argument("monte_carlo: runs must be >= 1");
  const RolloutPlan plan = make_plan(controller);
  std::vector<double> costs(runs);
  detail::parallel_for(runs, threads == 0 ? default_threads() : threads,
                       [&](std::uint64_t r) { costs[r] = rollout(controller, plan, seed, r).total_cost; });

  McReport report;
  report.policy = to_string(controller.kind());
  report.runs = runs;
  report.seed = seed;
  report.mean_cost = pairwise_sum(costs.data(), costs.size()) / static_cast<double>(runs);
  if (runs > 1) {
    std::vector<double> sq(runs);
    for (std::size_t i = 0; i < runs; ++i) {
      const double dev = costs[i] - report.mean_cost;
      sq[i] = dev * dev;
    }
    const double var = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(runs - 1);
    report.std_err = std::sqrt(var / static_cast<double>(runs));
  }
  return report;
}

EstimatorBias estimator_bias(const ClosedLoopController& controller, std::uint64_t runs, std::uint64_t seed,
                             unsigned threads) {
  if (runs < 2) throw std::invalid_argument("estimator_bias: runs must be >= 2");
  const ProblemSpec& spec = controller.spec();
  const int steps = spec.horizon() + 1;
  const int n1 = spec.dims.d_x1;
  const RolloutPlan plan = make_plan(controller);
  // errors[(t * n1 + i) * runs + r]
  std::vector<double> errors(static_cast<std::size_t>(steps * n1) * runs);
  detail::parallel_for(runs, threads == 0 ? default_threads() : threads, [&](std::uint64_t r) {
    const Trajectory traj = rollout(controller, plan, seed, r);
    for (int t = 0; t < steps; ++t) {
      const TrajectoryStep& s = traj.steps[static_cast<std::size_t>(t)];
      for (int i = 0; i < n1; ++i) {
        errors[static_cast<std::size_t>(t * n1 + i) * runs + r] = s.x1(i) - s.x_hat1(i);
      }
    }
  });

  EstimatorBias out;
  for (int t = 0; t < steps; ++t) {
    Vector mean(n1), se(n1);
    for (int i = 0; i < n1; ++i) {
      double* col = errors.data() + static_cast<std::size_t>(t * n1 + i) * runs;
      const double m = pairwise_sum(col, runs) / static_cast<double>(runs);
      std::vector<double> sq(runs);
      for (std::size_t r = 0; r < runs; ++r) sq[r] = (col[r] - m) * (col[r] - m);
      mean(i) = m;
      se(i) = std::sqrt(pairwise_sum(sq.data(), runs) / static_cast<double>(runs - 1) / static_cast<double>(runs));
    }
    out.mean.push_back(mean);
    out.std_err.push_back(se);
  }
  return out;
}

std::string trajectory_csv(const Trajectory& trajectory, const Dims& dims) {
  std::ostringstream os;
  auto header = [&](const char* name, int n) {
    for (int i = 0; i < n; ++i) os << ',' << name << '[' << i << ']';
  };
  os << 't';
  header("x0", dims.d_x0);
  header("x1", dims.d_x1);
  os << ",m0,m1,gamma";
  header("u0", dims.d_u0);
  header("u1", dims.d_u1);
  header("xhat", dims.d_x1);
  os << ",stage_cost\n";

  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ',' << buf;
  };
  for (const TrajectoryStep& s : trajectory.steps) {
    os << s.t;
    for (Eigen::Index i = 0; i < s.x0.size(); ++i) num(s.x0(i));
    for (Eigen::Index i = 0; i < s.x1.size(); ++i) num(s.x1(i));
    os << ',' << s.m0 + 1 << ',' << s.m1 + 1 << ',' << s.gamma;
    for (Eigen::Index i = 0; i < s.u0.size(); ++i) num(s.u0(i));
    for (Eigen::Index i = 0; i < s.u1.size(); ++i) num(s.u1(i));
    for (Eigen::Index i = 0; i < s.x_hat1.size(); ++i) num(s.x_hat1(i));
    num(s.stage_cost);
    os << '\n';
  }
  return os.str();
}

}  // namespace decswitch

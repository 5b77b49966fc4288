#include "decswitch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

#include "decswitch/sim.hpp"
#include "json_util.hpp"
#include "parallel.hpp"

namespace decswitch {

ClosedLoopStage build_closed_loop(const ProblemSpec& spec, const LinearPolicy& policy, int t, int m0, int m1,
                                  int gamma_t, int gamma_next) {
  const Dims& d = spec.dims;
  const int xi = d.d_x0 + 2 * d.d_x1;
  const int n = xi + 1;
  const int xhat = d.d_x0 + d.d_x1;

  const StageLaw& law = policy.law(t, m0, m1, gamma_t);
  if (law.u0.cols() != xi || law.u1.cols() != xi) {
    throw UnsupportedPolicyError("policy '" + policy.name() + "' is not linear in (x0, x1, x_hat1)");
  }

  ClosedLoopStage s;
  s.Theta = Matrix::Zero(d.du(), n);
  s.Theta.block(0, 0, d.d_u0, xi) = law.u0;
  s.Theta.block(d.d_u0, 0, d.d_u1, xi) = law.u1;

  Matrix Lambda = Matrix::Zero(d.dx(), n);
  Lambda.leftCols(d.dx()).setIdentity();

  const AssembledSystem sys = assemble_system(spec, m0, m1);
  s.F = Matrix::Zero(n, n);
  s.F.topRows(d.dx()) = sys.A * Lambda + sys.B * s.Theta;
  s.G = Matrix::Zero(n, d.dx());
  s.G.topRows(d.dx()).setIdentity();
  if (gamma_next) {
    s.F.middleRows(xhat, d.d_x1) = s.F.middleRows(d.d_x0, d.d_x1);
    s.G.middleRows(xhat, d.d_x1) = s.G.middleRows(d.d_x0, d.d_x1);
  } else {
    s.F.block(xhat, 0, d.d_x1, xi) = prediction_map(spec, policy, t, m0, m1, gamma_t);
  }
  s.F(n - 1, n - 1) = 1.0;

  s.M = matkit::symmetrize(Lambda.transpose() * spec.Q(t, m0, m1) * Lambda +
                           s.Theta.transpose() * spec.R(t, m0, m1) * s.Theta);
  return s;
}

double sequence_count(const ProblemSpec& spec) {
  return std::pow(2.0 * spec.kappa0() * spec.kappa1(), spec.horizon() + 1);
}

void check_scale_guard(const ProblemSpec& spec) {
  const double count = sequence_count(spec);
  if (count > kSequenceLimit) throw ScaleGuardError(count, kSequenceLimit);
}

namespace {

// Stage maps plus the noise second moment G W G', for every
// (t, m0, m1, gamma_t, gamma_next).
class StageCache {
 public:
  StageCache(const ProblemSpec& spec, const LinearPolicy& policy) : spec_(spec) {
    for (int t = 0; t <= spec.horizon(); ++t) {
      const Matrix W = matkit::blockdiag(spec.noise_cov0(t), spec.noise_cov1(t));
      for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
        for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
          for (int g = 0; g < 2; ++g) {
            for (int gn = 0; gn < 2; ++gn) {
              ClosedLoopStage s = build_closed_loop(spec, policy, t, m0, m1, g, gn);
              noise_.push_back(matkit::symmetrize(s.G * W * s.G.transpose()));
              stages_.push_back(std::move(s));
            }
          }
        }
      }
    }
  }

  const ClosedLoopStage& stage(int t, int m0, int m1, int g, int gn) const { return stages_[index(t, m0, m1, g, gn)]; }
  const Matrix& noise(int t, int m0, int m1, int g, int gn) const { return noise_[index(t, m0, m1, g, gn)]; }

 private:
  std::size_t index(int t, int m0, int m1, int g, int gn) const {
    return static_cast<std::size_t>((((t * spec_.kappa0() + m0) * spec_.kappa1() + m1) * 2 + g) * 2 + gn);
  }

  const ProblemSpec& spec_;
  std::vector<ClosedLoopStage> stages_;
  std::vector<Matrix> noise_;
};

Matrix initial_moment(const ProblemSpec& spec, int gamma0) {
  const Dims& d = spec.dims;
  const int n = d.d_x0 + 2 * d.d_x1 + 1;
  const int xhat = d.d_x0 + d.d_x1;
  Vector mean(n);
  mean << spec.stoch.mu_x0, spec.stoch.mu_x1, spec.stoch.mu_x1, 1.0;
  Matrix cov = Matrix::Zero(n, n);
  cov.block(0, 0, d.d_x0, d.d_x0) = spec.init_cov0();
  const Matrix c1 = spec.init_cov1();
  cov.block(d.d_x0, d.d_x0, d.d_x1, d.d_x1) = c1;
  if (gamma0) {
    cov.block(xhat, xhat, d.d_x1, d.d_x1) = c1;
    cov.block(d.d_x0, xhat, d.d_x1, d.d_x1) = c1;
    cov.block(xhat, d.d_x0, d.d_x1, d.d_x1) = c1;
  }
  return cov + mean * mean.transpose();
}

// Expected cost from stage t onward, given the moment at t and gamma_t, for
// the modes (m0, m1) at t.
double branch_cost(const ProblemSpec& spec, const StageCache& cache, int t, int gamma_t, const ScenarioMoment& node,
                   int m0, int m1);

double node_cost(const ProblemSpec& spec, const StageCache& cache, int t, int gamma_t, const ScenarioMoment& node) {
  double total = 0.0;
  for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
    for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
      total += spec.pi0(m0) * spec.pi1(m1) * branch_cost(spec, cache, t, gamma_t, node, m0, m1);
    }
  }
  return total;
}

double branch_cost(const ProblemSpec& spec, const StageCache& cache, int t, int gamma_t, const ScenarioMoment& node,
                   int m0, int m1) {
  double cost = (cache.stage(t, m0, m1, gamma_t, 0).M.cwiseProduct(node.Sigma)).sum();
  if (t == spec.horizon()) return cost;
  for (int gn = 0; gn < 2; ++gn) {
    const double p = spec.channel.p(gn);
    if (p == 0.0) continue;
    const ClosedLoopStage& s = cache.stage(t, m0, m1, gamma_t, gn);
    ScenarioMoment next;
    next.Sigma = s.F * node.Sigma * s.F.transpose() + cache.noise(t, m0, m1, gamma_t, gn);
    next.prob = node.prob * spec.pi0(m0) * spec.pi1(m1) * p;
    cost += p * node_cost(spec, cache, t + 1, gn, next);
  }
  return cost;
}

double probability_below(const ProblemSpec& spec, int t) {
  double total = 0.0;
  for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
    for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
      double inner = 1.0;
      if (t < spec.horizon()) {
        inner = 0.0;
        for (int gn = 0; gn < 2; ++gn) inner += spec.channel.p(gn) * probability_below(spec, t + 1);
      }
      total += spec.pi0(m0) * spec.pi1(m1) * inner;
    }
  }
  return total;
}

}  // namespace

double exact_expected_cost(const ProblemSpec& spec, const LinearPolicy& policy, unsigned threads) {
  check_scale_guard(spec);
  policy.check(spec);
  const StageCache cache(spec, policy);

  // Top-level branches (gamma_0, m0_0, m1_0), each summed sequentially so the
  // result is independent of the thread count.
  const int k0 = spec.kappa0();
  const int k1 = spec.kappa1();
  const std::uint64_t branches = static_cast<std::uint64_t>(2 * k0 * k1);
  std::vector<double> parts(branches, 0.0);
  detail::parallel_for(branches, threads == 0 ? default_threads() : threads, [&](std::uint64_t b) {
    const int g0 = static_cast<int>(b) / (k0 * k1);
    const int m0 = (static_cast<int>(b) / k1) % k0;
    const int m1 = static_cast<int>(b) % k1;
    const double p = spec.channel.p(g0) * spec.pi0(m0) * spec.pi1(m1);
    if (p == 0.0) return;
    ScenarioMoment root{initial_moment(spec, g0), spec.channel.p(g0)};
    parts[b] = p * branch_cost(spec, cache, 0, g0, root, m0, m1);
  });
  return pairwise_sum(parts.data(), parts.size());
}

double total_sequence_probability(const ProblemSpec& spec) {
  check_scale_guard(spec);
  double total = 0.0;
  for (int g0 = 0; g0 < 2; ++g0) total += spec.channel.p(g0) * probability_below(spec, 0);
  return total;
}

namespace {

struct GainRef {
  Matrix* matrix;
  std::string name;
};

std::vector<GainRef> gain_matrices(const ProblemSpec& spec, GainTables& gains) {
  std::vector<GainRef> out;
  for (int t = 0; t <= spec.horizon(); ++t) {
    const auto tn = static_cast<std::size_t>(t);
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      for (ZTilde z : gains.K[tn].ztildes()) {
        out.push_back({&gains.K[tn].at(m0, z),
                       "K[t=" + std::to_string(t) + "][m0=" + std::to_string(m0 + 1) + "][" + z.key() + "]"});
      }
      for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
        out.push_back({&gains.Ktilde[tn].at(m0, m1), "Ktilde[t=" + std::to_string(t) + "][m0=" +
                                                         std::to_string(m0 + 1) + "][m" + std::to_string(m1 + 1) +
                                                         "]"});
      }
    }
  }
  return out;
}

struct EntryRef {
  std::size_t matrix;
  Eigen::Index row, col;
};

}  // namespace

StationarityReport stationarity_check(const ProblemSpec& spec, const GainTables& gains,
                                      const StationarityOptions& options) {
  check_scale_guard(spec);
  GainTables work = gains;
  const std::vector<GainRef> refs = gain_matrices(spec, work);
  auto cost_of = [&](const GainTables& g) {
    return exact_expected_cost(spec, LinearPolicy::from_gains(spec, g), options.threads);
  };

  StationarityReport report;
  report.cost = cost_of(work);
  report.gradient_tolerance = 1e-6 * (1.0 + std::abs(report.cost));

  std::vector<EntryRef> entries;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    for (Eigen::Index c = 0; c < refs[k].matrix->cols(); ++c) {
      for (Eigen::Index r = 0; r < refs[k].matrix->rows(); ++r) entries.push_back({k, r, c});
    }
  }
  std::mt19937_64 rng(options.seed);
  if (options.max_entries > 0 && entries.size() > static_cast<std::size_t>(options.max_entries)) {
    std::shuffle(entries.begin(), entries.end(), rng);
    entries.resize(static_cast<std::size_t>(options.max_entries));
  }

  for (const EntryRef& e : entries) {
    double& g = (*refs[e.matrix].matrix)(e.row, e.col);
    const double original = g;
    g = original + options.eps;
    const double up = cost_of(work);
    g = original - options.eps;
    const double down = cost_of(work);
    g = original;
    const double grad = (up - down) / (2.0 * options.eps);
    ++report.entries_checked;
    if (std::abs(grad) > report.max_abs_gradient || report.worst_entry.empty()) {
      report.max_abs_gradient = std::max(report.max_abs_gradient, std::abs(grad));
      report.worst_entry = refs[e.matrix].name + "(" + std::to_string(e.row + 1) + "," +
                           std::to_string(e.col + 1) + ")";
    }
  }

  std::normal_distribution<double> normal;
  report.min_perturbation_delta = std::numeric_limits<double>::infinity();
  for (int k = 0; k < options.perturbations; ++k) {
    GainTables perturbed = gains;
    std::vector<GainRef> prefs = gain_matrices(spec, perturbed);
    std::vector<Matrix> dirs;
    double norm2 = 0.0;
    for (const GainRef& ref : prefs) {
      Matrix dir(ref.matrix->rows(), ref.matrix->cols());
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir.data()[i] = normal(rng);
      norm2 += dir.squaredNorm();
      dirs.push_back(std::move(dir));
    }
    const double scale = options.perturbation_norm / std::sqrt(norm2);
    for (std::size_t i = 0; i < prefs.size(); ++i) *prefs[i].matrix += scale * dirs[i];
    report.min_perturbation_delta = std::min(report.min_perturbation_delta, cost_of(perturbed) - report.cost);
  }
  if (options.perturbations <= 0) report.min_perturbation_delta = 0.0;

  const bool gradient_ok = report.max_abs_gradient <= report.gradient_tolerance;
  const bool perturbation_ok = report.min_perturbation_delta >= -1e-10;
  report.passed = gradient_ok && perturbation_ok;
  if (!report.passed && options.throw_on_violation) {
    if (!gradient_ok) throw OptimalityViolation(report.worst_entry, report.max_abs_gradient);
    throw OptimalityViolation("random perturbation", report.min_perturbation_delta);
  }
  return report;
}

double OracleReport::abs_diff() const { return std::abs(exact_cost - j_star); }

double OracleReport::rel_diff() const { return j_star == 0.0 ? abs_diff() : abs_diff() / std::abs(j_star); }

std::string oracle_report_json(const OracleReport& report, int indent) {
  detail::json root;
  root["policy"] = report.policy;
  root["exact_cost"] = report.exact_cost;
  root["j_star"] = report.j_star;
  root["abs_diff"] = report.abs_diff();
  root["rel_diff"] = report.rel_diff();
  if (report.stationarity) {
    const StationarityReport& s = *report.stationarity;
    root["stationarity"] = {{"max_abs_gradient", s.max_abs_gradient},
                            {"worst_entry", s.worst_entry},
                            {"gradient_tolerance", s.gradient_tolerance},
                            {"entries_checked", s.entries_checked},
                            {"min_perturbation_delta", s.min_perturbation_delta},
                            {"passed", s.passed}};
  } else {
    root["stationarity"] = nullptr;
  }
  return root.dump(indent);
}

}  // namespace decswitch

#include "decswitch_cli/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <decswitch/control.hpp>
#include <decswitch/instances.hpp>
#include <decswitch/oracle.hpp>
#include <decswitch/sim.hpp>

namespace decswitch::cli {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

CheckResult make(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok ? CheckStatus::pass : CheckStatus::fail, std::move(detail)};
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  return (a - b).cwiseAbs().maxCoeff();
}

CheckResult psd_tables(const ProblemSpec& spec, const SolutionBundle& bundle) {
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  for (int t = 0; t <= spec.horizon(); ++t) {
    const auto tn = static_cast<std::size_t>(t);
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      for (ZTilde z : bundle.values.P[tn].ztildes()) {
        for (const Matrix* M : {&bundle.values.P[tn].at(m0, z), &bundle.values.Ptilde[tn].at(m0, z)}) {
          const double e = matkit::min_eigenvalue(*M);
          if (e < worst) {
            worst = e;
            where = "t=" + std::to_string(t) + " m0=" + std::to_string(m0 + 1) + " ztilde=" + z.key();
          }
        }
      }
    }
  }
  return make("psd-tables", worst >= -1e-9, "min eigenvalue " + fmt(worst) + " at " + where);
}

}  // namespace

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::pass:
      return "PASS";
    case CheckStatus::fail:
      return "FAIL";
    case CheckStatus::skip:
      return "SKIP";
  }
  return "?";
}

double centralized_mismatch(const ProblemSpec& spec, const SolutionBundle& bundle) {
  const CentralizedTables c = centralized_solve(spec);
  double worst = 0.0;
  for (int t = 0; t <= spec.horizon(); ++t) {
    const auto tn = static_cast<std::size_t>(t);
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
        const ZTilde z = ZTilde::local(m1);
        const Matrix& P = bundle.values.P[tn].at(m0, z);
        const Matrix& K = bundle.gains.K[tn].at(m0, z);
        const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
        worst = std::max(worst, max_abs_diff(P, c.P[tn].at(m0, m1)) / scale);
        worst = std::max(worst, max_abs_diff(K, c.K[tn].at(m0, m1)) / std::max(1.0, K.cwiseAbs().maxCoeff()));
      }
    }
  }
  return worst;
}

double kappa1_collapse_mismatch(const ProblemSpec& spec, const SolutionBundle& bundle) {
  if (spec.kappa1() != 1) throw DimensionError("kappa1 collapse needs a single local mode");
  const ZTilde e = ZTilde::empty();
  const ZTilde l = ZTilde::local(0);
  double worst = 0.0;
  for (int t = 0; t <= spec.horizon(); ++t) {
    const auto tn = static_cast<std::size_t>(t);
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      worst = std::max(worst, max_abs_diff(bundle.values.P[tn].at(m0, e), bundle.values.P[tn].at(m0, l)));
      worst = std::max(worst, max_abs_diff(bundle.gains.K[tn].at(m0, e), bundle.gains.K[tn].at(m0, l)));
      worst = std::max(worst, max_abs_diff(bundle.values.Ptilde[tn].at(m0, e), bundle.values.Ptilde[tn].at(m0, l)));
    }
  }
  return worst;
}

std::vector<CheckResult> validate_checks(const ProblemSpec& spec, const SolutionBundle& bundle,
                                         const ValidateOptions& options) {
  std::vector<CheckResult> out;
  out.push_back(psd_tables(spec, bundle));

  if (spec.kappa1() == 1) {
    const double d = kappa1_collapse_mismatch(spec, bundle);
    out.push_back(make("kappa1-collapse", d <= 1e-12, "max difference " + fmt(d)));
  } else {
    out.push_back({"kappa1-collapse", CheckStatus::skip, "kappa1 = " + std::to_string(spec.kappa1())});
  }

  {
    const ProblemSpec full = instances::with_p1(spec, 1.0);
    const SolutionBundle full_bundle = spec.channel.p1 == 1.0 ? bundle : solve_backward(full);
    const double d = centralized_mismatch(full, full_bundle);
    out.push_back(make("centralized-match", d <= 1e-10, "scaled max difference " + fmt(d) + " at p1 = 1"));
  }

  if (sequence_count(spec) <= kSequenceLimit) {
    const double exact = exact_expected_cost(spec, LinearPolicy::from_gains(spec, bundle.gains), options.threads);
    const double rel = std::abs(exact - bundle.j_star) / std::max(std::abs(bundle.j_star), 1e-300);
    out.push_back(make("oracle-identity", rel <= 1e-8 || exact == bundle.j_star,
                       "exact " + fmt(exact) + " vs j_star " + fmt(bundle.j_star) + ", relative " + fmt(rel)));
  } else {
    out.push_back({"oracle-identity", CheckStatus::skip, "sequence count above guard"});
  }

  const ClosedLoopController controller(spec, bundle, PolicyKind::optimal);
  {
    const McReport mc = monte_carlo(controller, options.runs, options.seed, options.threads);
    const double diff = std::abs(mc.mean_cost - bundle.j_star);
    const double bound = 3.0 * mc.std_err + 1e-9 * (1.0 + std::abs(bundle.j_star));
    out.push_back(make("mc-sanity", diff <= bound,
                       "mean " + fmt(mc.mean_cost) + " vs j_star " + fmt(bundle.j_star) + ", 3*SE " +
                           fmt(3.0 * mc.std_err)));
  }

  if (options.runs >= 2) {
    const EstimatorBias bias = estimator_bias(controller, options.runs, options.seed + 1, options.threads);
    double worst = 0.0;
    bool ok = true;
    for (std::size_t t = 0; t < bias.mean.size(); ++t) {
      for (Eigen::Index i = 0; i < bias.mean[t].size(); ++i) {
        const double m = std::abs(bias.mean[t](i));
        const double se = bias.std_err[t](i);
        if (m > 3.0 * se + 1e-12) ok = false;
        if (se > 0.0) worst = std::max(worst, m / se);
      }
    }
    out.push_back(make("estimator-unbiased", ok, "largest |mean error| / SE " + fmt(worst)));
  } else {
    out.push_back({"estimator-unbiased", CheckStatus::skip, "needs at least 2 runs"});
  }

  {
    const ProblemSpec full = instances::with_p1(spec, 1.0);
    const SolutionBundle full_bundle = solve_backward(full);
    const ClosedLoopController c(full, full_bundle, PolicyKind::optimal);
    bool exact = true;
    const std::uint64_t runs = std::min<std::uint64_t>(options.runs, 200);
    for (std::uint64_t r = 0; r < runs && exact; ++r) {
      for (const TrajectoryStep& s : simulate_run(c, options.seed, r).steps) {
        if (!matkit::identical(s.x_hat1, s.x1)) exact = false;
      }
    }
    out.push_back(make("estimator-exact", exact, "x_hat equals x1 bitwise when every packet arrives"));
  }
  return out;
}

}  // namespace decswitch::cli

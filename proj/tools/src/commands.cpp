#include "decswitch_cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include <decswitch/control.hpp>
#include <decswitch/errors.hpp>
#include <decswitch/instances.hpp>
#include <decswitch/model.hpp>
#include <decswitch/oracle.hpp>
#include <decswitch/sim.hpp>
#include <decswitch/solver.hpp>

#include "decswitch_cli/checks.hpp"

namespace decswitch::cli {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Any failure while reading the problem is a configuration error, including
// definiteness failures of Q, R or the covariances.
struct ConfigLoadError : Error {
  using Error::Error;
};

ProblemSpec load_config(const std::string& path) {
  try {
    return load_problem(path);
  } catch (const ConfigError&) {
    throw;
  } catch (const DefinitenessError& e) {
    throw ConfigLoadError(e.what());
  }
}

SolutionBundle solution_for(const ProblemSpec& spec, const std::string& path) {
  if (path.empty()) return solve_backward(spec);
  return load_solution(path, spec);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw Error("failed writing " + path);
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file(path, text);
  }
}

struct Common {
  unsigned threads = 0;
};

struct SolveArgs {
  std::string config, out;
};

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  const ProblemSpec spec = load_config(a.config);
  const SolutionBundle bundle = solve_backward(spec);
  if (!a.out.empty()) write_file(a.out, solution_to_json(bundle));
  out << "j_star = " << num(bundle.j_star) << "\n";
  for (int t = 0; t <= spec.horizon(); ++t) {
    const auto tn = static_cast<std::size_t>(t);
    double p = std::numeric_limits<double>::infinity();
    double pt = p;
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      for (ZTilde z : bundle.values.P[tn].ztildes()) {
        p = std::min(p, matkit::min_eigenvalue(bundle.values.P[tn].at(m0, z)));
        pt = std::min(pt, matkit::min_eigenvalue(bundle.values.Ptilde[tn].at(m0, z)));
      }
    }
    out << "t=" << t << " min_eig(P)=" << num(p) << " min_eig(Ptilde)=" << num(pt) << "\n";
  }
  return kOk;
}

struct SimulateArgs {
  std::string config, solution, policy = "optimal", out, dump_dir;
  std::uint64_t runs = 10000;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& a, const Common& c, std::ostream& out) {
  const ProblemSpec spec = load_config(a.config);
  const PolicyKind kind = parse_policy_kind(a.policy);
  const SolutionBundle bundle = solution_for(spec, a.solution);
  const ClosedLoopController controller(spec, bundle, kind);
  const McReport mc = monte_carlo(controller, a.runs, a.seed, c.threads);

  std::ostringstream csv;
  csv << "policy,runs,seed,mean_cost,std_err\n"
      << mc.policy << ',' << mc.runs << ',' << mc.seed << ',' << num(mc.mean_cost) << ',' << num(mc.std_err) << "\n";
  emit(a.out, csv.str(), out);

  if (!a.dump_dir.empty()) {
    fs::create_directories(a.dump_dir);
    for (std::uint64_t r = 0; r < a.runs; ++r) {
      const Trajectory traj = simulate_run(controller, a.seed, r);
      write_file((fs::path(a.dump_dir) / ("run_" + std::to_string(r) + ".csv")).string(),
                 trajectory_csv(traj, spec.dims));
    }
  }
  return kOk;
}

struct EvaluateArgs {
  std::string config, solution, policy = "optimal", out;
  int stationarity_entries = 32;
  bool stationarity = true;
};

int cmd_evaluate_exact(const EvaluateArgs& a, const Common& c, std::ostream& out) {
  const ProblemSpec spec = load_config(a.config);
  const PolicyKind kind = parse_policy_kind(a.policy);
  check_scale_guard(spec);
  const SolutionBundle bundle = solution_for(spec, a.solution);

  OracleReport report;
  report.policy = to_string(kind);
  report.exact_cost = exact_expected_cost(spec, make_policy(kind, spec, bundle), c.threads);
  report.j_star = bundle.j_star;
  if (kind == PolicyKind::optimal && a.stationarity) {
    StationarityOptions opts;
    opts.max_entries = a.stationarity_entries;
    opts.threads = c.threads;
    report.stationarity = stationarity_check(spec, bundle.gains, opts);
  }
  emit(a.out, oracle_report_json(report) + "\n", out);
  return kOk;
}

struct ValidateArgs {
  std::string config, solution;
  std::uint64_t runs = 20000;
  std::uint64_t seed = 1;
};

int cmd_validate(const ValidateArgs& a, const Common& c, std::ostream& out) {
  const ProblemSpec spec = load_config(a.config);
  const SolutionBundle bundle = solution_for(spec, a.solution);
  const std::vector<CheckResult> checks = validate_checks(spec, bundle, {a.runs, a.seed, c.threads});

  bool ok = true;
  std::ostringstream json;
  json << "{\"checks\":[";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const CheckResult& r = checks[i];
    if (r.status == CheckStatus::fail) ok = false;
    out << r.name << ": " << to_string(r.status) << " (" << r.detail << ")\n";
    json << (i ? "," : "") << "{\"name\":\"" << r.name << "\",\"status\":\"" << to_string(r.status) << "\"}";
  }
  json << "],\"passed\":" << (ok ? "true" : "false") << "}";
  out << json.str() << "\n";
  return ok ? kOk : kOther;
}

struct SweepArgs {
  std::string config, param = "p1", out;
  std::vector<double> values;
  std::uint64_t runs = 10000;
  std::uint64_t seed = 1;
};

int cmd_sweep(const SweepArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  if (a.param != "p1") throw ConfigError("unsupported sweep parameter '" + a.param + "' (only p1)");
  const ProblemSpec base = load_config(a.config);

  std::vector<double> values;
  for (double v : a.values) {
    if (std::find(values.begin(), values.end(), v) != values.end()) {
      err << "warning: duplicate value " << num(v) << " ignored\n";
      continue;
    }
    values.push_back(v);
  }

  std::ostringstream csv;
  csv << "p1,j_star,mc_mean,mc_se\n";
  std::vector<double> j;
  for (double v : values) {
    const ProblemSpec spec = instances::with_p1(base, v);
    const SolutionBundle bundle = solve_backward(spec);
    const ClosedLoopController controller(spec, bundle, PolicyKind::optimal);
    const McReport mc = monte_carlo(controller, a.runs, a.seed, c.threads);
    csv << num(v) << ',' << num(bundle.j_star) << ',' << num(mc.mean_cost) << ',' << num(mc.std_err) << "\n";
    j.push_back(bundle.j_star);
  }
  emit(a.out, csv.str(), out);

  // Reported only: nothing guarantees monotonicity in p1.
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  bool monotone = true;
  for (std::size_t i = 1; i < order.size(); ++i) monotone = monotone && j[order[i]] <= j[order[i - 1]];
  err << "j_star non-increasing in p1 over this sweep: " << (monotone ? "yes" : "no") << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const CLI::IsMember kPolicyNames({"optimal", "zero", "ce", "certainty-equivalent", "centralized"});
  CLI::App app{"Decentralized switched-LQ solver and simulator", "decswitch"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads, "Worker threads (default: DECSWITCH_THREADS or hardware)")
      ->check(CLI::NonNegativeNumber);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Run the backward recursion and write the solution bundle");
  s->add_option("--config", solve.config, "Problem JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--out", solve.out, "Solution JSON to write");

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "Monte Carlo evaluation of a policy");
  m->add_option("--config", sim.config, "Problem JSON")->required()->check(CLI::ExistingFile);
  m->add_option("--solution", sim.solution, "Solution JSON (solved on the fly if omitted)")
      ->check(CLI::ExistingFile);
  m->add_option("--policy", sim.policy, "optimal | zero | ce | centralized")->check(kPolicyNames);
  m->add_option("--runs", sim.runs, "Number of runs")->check(CLI::PositiveNumber);
  m->add_option("--seed", sim.seed, "Base seed");
  m->add_option("--out", sim.out, "CSV output (stdout if omitted)");
  m->add_option("--dump-trajectories", sim.dump_dir, "Directory for per-run trajectory CSVs");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate-exact", "Exact expected cost by sequence enumeration");
  e->add_option("--config", ev.config, "Problem JSON")->required()->check(CLI::ExistingFile);
  e->add_option("--solution", ev.solution, "Solution JSON (solved on the fly if omitted)")->check(CLI::ExistingFile);
  e->add_option("--policy", ev.policy, "optimal | zero | ce | centralized")->check(kPolicyNames);
  e->add_option("--out", ev.out, "Report JSON (stdout if omitted)");
  e->add_option("--stationarity-entries", ev.stationarity_entries,
                "Gain entries probed by finite differences (0 = all)")
      ->check(CLI::NonNegativeNumber);
  e->add_flag("!--no-stationarity", ev.stationarity, "Skip the stationarity check");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "Run the invariant battery on one problem");
  v->add_option("--config", val.config, "Problem JSON")->required()->check(CLI::ExistingFile);
  v->add_option("--solution", val.solution, "Solution JSON (solved on the fly if omitted)")->check(CLI::ExistingFile);
  v->add_option("--runs", val.runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
  v->add_option("--seed", val.seed, "Base seed");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Solve and simulate over a range of p1 values");
  w->add_option("--config", sw.config, "Problem JSON")->required()->check(CLI::ExistingFile);
  w->add_option("--param", sw.param, "Parameter to sweep (p1)");
  w->add_option("--values", sw.values, "Comma-separated values")->required()->delimiter(',');
  w->add_option("--runs", sw.runs, "Monte Carlo runs per value")->check(CLI::PositiveNumber);
  w->add_option("--seed", sw.seed, "Base seed");
  w->add_option("--out", sw.out, "CSV output (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kConfig;
  }

  try {
    if (*s) return cmd_solve(solve, out);
    if (*m) return cmd_simulate(sim, common, out);
    if (*e) return cmd_evaluate_exact(ev, common, out);
    if (*v) return cmd_validate(val, common, out);
    if (*w) return cmd_sweep(sw, common, out, err);
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kConfig;
  } catch (const ConfigLoadError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kConfig;
  } catch (const ScaleGuardError& ex) {
    err << "scale guard: " << ex.what() << "\n";
    return kScaleGuard;
  } catch (const NumericError& ex) {
    err << "numerical error: " << ex.what() << "\n";
    return kNumeric;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kOther;
  }
  return kOther;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"decswitch"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace decswitch::cli

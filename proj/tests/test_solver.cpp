#include <random>

#include <json.hpp>

#include <decswitch/control.hpp>
#include <decswitch/instances.hpp>
#include <decswitch/solver.hpp>

#include "support.hpp"

namespace decswitch {
namespace {

using testing::mat;
using testing::near;

const std::vector<double> kChannelValues{0.0, 0.3, 0.5, 0.7, 1.0};

MatrixTable constant_table(const ProblemSpec& spec, const Matrix& M) {
  MatrixTable G(spec.kappa0(), spec.kappa1());
  for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
    for (ZTilde z : G.ztildes()) G.at(m0, z) = M;
  }
  return G;
}

MatrixTable random_table(const ProblemSpec& spec, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  MatrixTable G(spec.kappa0(), spec.kappa1());
  for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
    for (ZTilde z : G.ztildes()) {
      Matrix M(n, n);
      for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = normal(rng);
      G.at(m0, z) = M;
    }
  }
  return G;
}

ProblemSpec two_local_modes(double p1) {
  ProblemSpec out = instances::s2(p1);
  out.modes.kappa1 = 2;
  out.modes.pi_m1 = {0.4, 0.6};
  for (PairTable<Matrix>* t : {&out.system.A10, &out.system.A11, &out.system.B10, &out.system.B11}) {
    const Matrix M = t->at(0, 0);
    *t = PairTable<Matrix>(1, 2, M);
  }
  out.system.A11.at(0, 1) = mat({{0.5}});
  out.system.B11.at(0, 1) = mat({{2.0}});
  for (auto* c : {&out.cost.Q, &out.cost.R}) {
    for (auto& slice : *c) slice = PairTable<Matrix>(1, 2, slice.at(0, 0));
  }
  validate_problem(out);
  return out;
}

TEST(ZTilde, KeysAndSlots) {
  EXPECT_EQ(ZTilde::empty().key(), "empty");
  EXPECT_EQ(ZTilde::local(0).key(), "m1");
  EXPECT_EQ(ZTilde::local(2).key(), "m3");
  EXPECT_EQ(ZTilde::empty().slot(), 0);
  EXPECT_EQ(ZTilde::local(1).slot(), 2);
  EXPECT_TRUE(ZTilde::empty().is_empty());
  EXPECT_THROW(ZTilde::local(-1), IndexError);
  MatrixTable G(1, 2);
  EXPECT_THROW(G.at(0, ZTilde::local(2)), IndexError);
}

TEST(Operators, ConstantCollection) {
  for (double p1 : kChannelValues) {
    const ProblemSpec spec = two_local_modes(p1);
    const Matrix M = mat({{2, 1}, {1, 3}});
    EXPECT_TRUE(near(op_pi(constant_table(spec, M), spec), M, 1e-15));
  }
}

TEST(Operators, ScalarWeightedSum) {
  const ProblemSpec spec = instances::s2(0.3);
  MatrixTable G(1, 1);
  G.at(0, ZTilde::empty()) = mat({{2}});
  G.at(0, ZTilde::local(0)) = mat({{4}});
  EXPECT_NEAR(op_pi(G, spec)(0, 0), 0.7 * 2 + 0.3 * 4, 1e-15);
}

TEST(Operators, FullChannelUsesDeliveredEntries) {
  std::mt19937_64 rng(3);
  const ProblemSpec spec = two_local_modes(1.0);
  const MatrixTable G = random_table(spec, 2, rng);
  EXPECT_TRUE(near(op_pi(G, spec), op_pi_gamma(G, spec, 1), 0.0));
}

TEST(Operators, MissingEntryThrows) {
  const ProblemSpec spec = instances::s2(0.5);
  MatrixTable G(1, 1);
  G.at(0, ZTilde::empty()) = mat({{1}});
  EXPECT_THROW(op_pi(G, spec), MissingEntryError);
}

TEST(Operators, PsiOfEqualArgumentsIsPi) {
  std::mt19937_64 rng(8);
  for (double p1 : kChannelValues) {
    const ProblemSpec spec = two_local_modes(p1);
    const MatrixTable G = random_table(spec, 3, rng);
    EXPECT_TRUE(near(op_psi(G, G, spec), op_pi(G, spec), 1e-14));
  }
}

TEST(Operators, PsiWithBrokenChannel) {
  std::mt19937_64 rng(9);
  const ProblemSpec spec = two_local_modes(0.0);
  const MatrixTable G1 = random_table(spec, 2, rng);
  const MatrixTable G2 = random_table(spec, 2, rng);
  EXPECT_TRUE(near(op_psi(G1, G2, spec), op_pi_gamma(G1, spec, 0), 0.0));
}

TEST(Operators, Linearity) {
  std::mt19937_64 rng(10);
  for (double p1 : kChannelValues) {
    const ProblemSpec spec = two_local_modes(p1);
    const MatrixTable G = random_table(spec, 2, rng);
    const MatrixTable H = random_table(spec, 2, rng);
    const double a = 0.7, b = -1.3;
    MatrixTable mix(spec.kappa0(), spec.kappa1());
    for (ZTilde z : mix.ztildes()) mix.at(0, z) = a * G.at(0, z) + b * H.at(0, z);
    EXPECT_TRUE(near(op_pi(mix, spec), a * op_pi(G, spec) + b * op_pi(H, spec), 1e-13));
    EXPECT_TRUE(near(op_psi(mix, mix, spec), a * op_psi(G, G, spec) + b * op_psi(H, H, spec), 1e-13));
  }
}

TEST(Operators, HandInstancePsiAtStageZero) {
  for (double p1 : kChannelValues) {
    const ProblemSpec spec = instances::s2(p1);
    const SolutionBundle b = solve_backward(spec);
    MatrixTable P11(1, 1);
    for (ZTilde z : P11.ztildes()) P11.at(0, z) = b.values.P[1].at(0, z).bottomRightCorner(1, 1);
    EXPECT_NEAR(op_psi(b.values.Ptilde[1], P11, spec)(0, 0), 1.0, 1e-15);
  }
}

TEST(BuildStatic, SingleLocalModeCollapses) {
  const ProblemSpec spec = instances::s2();
  const StaticMatrices stat = build_static(spec);
  EXPECT_TRUE(near(stat.Daug.at(0, 0), stat.D.at(0, 0), 0.0));
  EXPECT_TRUE(near(stat.Dempty[0], stat.D.at(0, 0), 0.0));
  EXPECT_TRUE(near(stat.Cempty[0][0], stat.C[0].at(0, 0), 0.0));
  EXPECT_TRUE(near(stat.D11.at(0, 0), mat({{1, 1}}), 0.0));
}

TEST(BuildStatic, ShapesWithSeveralLocalModes) {
  const ProblemSpec spec = two_local_modes(0.5);
  const StaticMatrices stat = build_static(spec);
  const Dims& d = spec.dims;
  EXPECT_EQ(stat.Daug.at(0, 1).cols(), d.dx() + d.d_u0 + 2 * d.d_u1);
  EXPECT_EQ(stat.Dempty[0].rows(), d.dx());
  EXPECT_EQ(stat.Cempty[0][0].rows(), d.dx() + d.d_u0 + 2 * d.d_u1);
  EXPECT_TRUE(near(stat.Dempty[0], 0.4 * stat.Daug.at(0, 0) + 0.6 * stat.Daug.at(0, 1), 1e-15));
}

TEST(SolveBackward, TerminalTablesAreZero) {
  for (const ProblemSpec& spec : instances::random_battery(10, 21)) {
    const SolutionBundle b = solve_backward(spec);
    const auto T1 = static_cast<std::size_t>(spec.horizon() + 1);
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      for (ZTilde z : b.values.P[T1].ztildes()) {
        EXPECT_TRUE(b.values.P[T1].at(m0, z).isZero(0.0));
        EXPECT_TRUE(b.values.Ptilde[T1].at(m0, z).isZero(0.0));
      }
    }
    EXPECT_EQ(b.values.e[T1], 0.0);
  }
}

TEST(SolveBackward, SingleStepInstance) {
  const SolutionBundle b = solve_backward(instances::s1());
  for (ZTilde z : b.values.P[0].ztildes()) {
    EXPECT_TRUE(near(b.values.P[0].at(0, z), Matrix::Identity(2, 2), 1e-15));
    EXPECT_TRUE(near(b.values.Ptilde[0].at(0, z), mat({{1}}), 1e-15));
    EXPECT_TRUE(b.gains.K[0].at(0, z).isZero(0.0));
  }
  EXPECT_TRUE(b.gains.Ktilde[0].at(0, 0).isZero(0.0));
  EXPECT_EQ(b.values.e[0], 0.0);
}

TEST(SolveBackward, HandInstanceValues) {
  const Matrix P0 = mat({{8, 1}, {1, 7}}) / 5.0;
  const Matrix K0 = -mat({{3, 1}, {1, 2}}) / 5.0;
  for (double p1 : kChannelValues) {
    const SolutionBundle b = solve_backward(instances::s2(p1));
    for (ZTilde z : b.values.P[0].ztildes()) {
      EXPECT_TRUE(near(b.values.P[0].at(0, z), P0, 1e-12)) << "p1=" << p1;
      EXPECT_TRUE(near(b.gains.K[0].at(0, z), K0, 1e-12)) << "p1=" << p1;
      EXPECT_NEAR(b.values.Ptilde[0].at(0, z)(0, 0), 1.5, 1e-12);
    }
    EXPECT_NEAR(b.gains.Ktilde[0].at(0, 0)(0, 0), -0.5, 1e-12);
    EXPECT_TRUE(b.gains.K[1].at(0, ZTilde::empty()).isZero(0.0));
    EXPECT_TRUE(near(b.values.P[1].at(0, ZTilde::empty()), Matrix::Identity(2, 2), 0.0));
  }
}

TEST(SolveBackward, HandInstanceHamiltonianBlocks) {
  const ProblemSpec spec = instances::s2(0.5);
  const StaticMatrices stat = build_static(spec);
  SolutionBundle b = solve_backward(spec);
  const StageMatrices stage = backward_step(spec, stat, 0, b.values, b.gains);
  const auto p = matkit::partition(stage.H.at(0, ZTilde::local(0)), 2);
  EXPECT_TRUE(near(p.UU, mat({{3, 1}, {1, 2}}), 1e-15));
  EXPECT_TRUE(near(p.UX, mat({{2, 1}, {1, 1}}), 1e-15));
  EXPECT_TRUE(stage.Fempty[0].isZero(0.0));
}

TEST(SolveBackward, HandInstanceBitStableAcrossChannelValues) {
  const SolutionBundle ref = solve_backward(instances::s2(0.5));
  for (double p1 : kChannelValues) {
    const SolutionBundle b = solve_backward(instances::s2(p1));
    for (ZTilde z : ref.values.P[0].ztildes()) {
      EXPECT_TRUE(matkit::identical(b.values.P[0].at(0, z), ref.values.P[0].at(0, z)));
      EXPECT_TRUE(matkit::identical(b.gains.K[0].at(0, z), ref.gains.K[0].at(0, z)));
      EXPECT_TRUE(matkit::identical(b.values.Ptilde[0].at(0, z), ref.values.Ptilde[0].at(0, z)));
    }
    EXPECT_TRUE(matkit::identical(b.gains.Ktilde[0].at(0, 0), ref.gains.Ktilde[0].at(0, 0)));
  }
  const SolutionBundle again = solve_backward(instances::s2(0.5));
  for (std::size_t t = 0; t < ref.values.P.size(); ++t) {
    for (ZTilde z : ref.values.P[t].ztildes()) {
      EXPECT_TRUE(matkit::identical(again.values.P[t].at(0, z), ref.values.P[t].at(0, z)));
    }
  }
  EXPECT_EQ(again.j_star, ref.j_star);
}

TEST(SolveBackward, GainShapes) {
  for (const ProblemSpec& spec : instances::random_battery(10, 31)) {
    const SolutionBundle b = solve_backward(spec);
    const Dims& d = spec.dims;
    ASSERT_EQ(b.gains.K.size(), static_cast<std::size_t>(spec.horizon() + 1));
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      const Matrix& Ke = b.gains.K[0].at(m0, ZTilde::empty());
      EXPECT_EQ(Ke.rows(), d.d_u0 + spec.kappa1() * d.d_u1);
      EXPECT_EQ(Ke.cols(), d.dx());
      EXPECT_EQ(b.gains.K[0].at(m0, ZTilde::local(0)).rows(), d.du());
      EXPECT_EQ(b.gains.Ktilde[0].at(m0, 0).rows(), d.d_u1);
      EXPECT_EQ(b.gains.Ktilde[0].at(m0, 0).cols(), d.d_x1);
    }
  }
}

TEST(SolveBackward, ValueTablesStayPsd) {
  for (const ProblemSpec& spec : instances::random_battery(40, 1000)) {
    const SolutionBundle b = solve_backward(spec);
    for (std::size_t t = 0; t < b.values.P.size(); ++t) {
      for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
        for (ZTilde z : b.values.P[t].ztildes()) {
          EXPECT_GE(matkit::min_eigenvalue(b.values.P[t].at(m0, z)), -1e-9);
          EXPECT_GE(matkit::min_eigenvalue(b.values.Ptilde[t].at(m0, z)), -1e-9);
          EXPECT_EQ(matkit::asymmetry(b.values.P[t].at(m0, z)), 0.0);
        }
      }
    }
  }
}

TEST(SolveBackward, NoiseConstantGrowsBackward) {
  for (const ProblemSpec& spec : instances::random_battery(20, 2000)) {
    const SolutionBundle b = solve_backward(spec);
    for (std::size_t t = 0; t + 1 < b.values.e.size(); ++t) EXPECT_GE(b.values.e[t], b.values.e[t + 1]);
  }
}

TEST(SolveBackward, GainResidual) {
  for (const ProblemSpec& spec : instances::random_battery(20, 3000)) {
    const StaticMatrices stat = build_static(spec);
    SolutionBundle b = solve_backward(spec);
    for (int t = spec.horizon(); t >= 0; --t) {
      const StageMatrices stage = backward_step(spec, stat, t, b.values, b.gains);
      const auto tn = static_cast<std::size_t>(t);
      for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
        for (ZTilde z : stage.H.ztildes()) {
          const auto p = matkit::partition(stage.H.at(m0, z), spec.dims.dx());
          const double res = (p.UU * b.gains.K[tn].at(m0, z) + p.UX).norm();
          EXPECT_LE(res, 1e-10 * std::max(1.0, p.UX.norm()));
        }
        for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
          const auto p = matkit::partition(stage.Htilde.at(m0, m1), spec.dims.d_x1);
          EXPECT_LE((p.UU * b.gains.Ktilde[tn].at(m0, m1) + p.UX).norm(), 1e-10 * std::max(1.0, p.UX.norm()));
        }
      }
    }
  }
}

TEST(SolveBackward, SingleLocalModeCollapse) {
  instances::RandomOptions opts;
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 10; ++seed) {
    ProblemSpec spec = instances::random_instance(seed, opts);
    if (spec.kappa1() != 1) continue;
    ++checked;
    const StaticMatrices stat = build_static(spec);
    SolutionBundle b = solve_backward(spec);
    for (int t = 0; t <= spec.horizon(); ++t) {
      const auto tn = static_cast<std::size_t>(t);
      for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
        const ZTilde e = ZTilde::empty(), l = ZTilde::local(0);
        EXPECT_TRUE(near(b.values.P[tn].at(m0, e), b.values.P[tn].at(m0, l), 1e-12));
        EXPECT_TRUE(near(b.gains.K[tn].at(m0, e), b.gains.K[tn].at(m0, l), 1e-12));
        EXPECT_TRUE(near(b.values.Ptilde[tn].at(m0, e), b.values.Ptilde[tn].at(m0, l), 1e-12));
      }
    }
    const StageMatrices stage = backward_step(spec, stat, 0, b.values, b.gains);
    for (const Matrix& F : stage.Fempty) EXPECT_TRUE(F.isZero(1e-12));
  }
}

TEST(SolveBackward, FullChannelMatchesCentralizedRecursion) {
  for (ProblemSpec spec : instances::random_battery(20, 4000)) {
    spec = instances::with_p1(spec, 1.0);
    const SolutionBundle b = solve_backward(spec);
    const CentralizedTables c = centralized_solve(spec);
    for (std::size_t t = 0; t < c.P.size(); ++t) {
      for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
        for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
          EXPECT_TRUE(near(b.values.P[t].at(m0, ZTilde::local(m1)), c.P[t].at(m0, m1), 1e-10));
          if (t < c.K.size()) EXPECT_TRUE(near(b.gains.K[t].at(m0, ZTilde::local(m1)), c.K[t].at(m0, m1), 1e-10));
        }
      }
    }
  }
}

TEST(SolveBackward, ZeroProbabilityLocalModeIsSingular) {
  ProblemSpec spec = two_local_modes(0.5);
  spec.modes.pi_m1 = {1.0, 0.0};
  try {
    solve_backward(spec);
    FAIL() << "expected SingularBlockError";
  } catch (const SingularBlockError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("t=1"), std::string::npos) << what;
    EXPECT_NE(what.find("m0=1"), std::string::npos) << what;
    EXPECT_NE(what.find("ztilde=empty"), std::string::npos) << what;
  }
}

TEST(AnalyticCost, SingleStepIsInitialSecondMoment) {
  for (double p1 : kChannelValues) {
    // mean^2 + variance summed over both plants: 1 + 0.5 + 4 + 0.25.
    EXPECT_NEAR(solve_backward(instances::s1(p1)).j_star, 5.75, 1e-14);
  }
}

TEST(AnalyticCost, HandInstance) {
  // Two-step hand evaluation: 3 + 1/2 from the initial statistics under a
  // lost packet, 3 under a delivered one, plus e_0 = 2.
  EXPECT_NEAR(solve_backward(instances::s2(0.0)).j_star, 5.1, 1e-14);
  EXPECT_NEAR(solve_backward(instances::s2(0.5)).j_star, 5.05, 1e-14);
  EXPECT_NEAR(solve_backward(instances::s2(1.0)).j_star, 5.0, 1e-14);
  EXPECT_NEAR(solve_backward(instances::s2(0.5)).values.e[0], 2.0, 1e-15);
}

TEST(AnalyticCost, ZeroStateZeroNoise) {
  for (ProblemSpec spec : instances::random_battery(10, 50)) {
    spec.stoch.family = NoiseFamily::zero;
    spec.stoch.mu_x0.setZero();
    spec.stoch.mu_x1.setZero();
    EXPECT_EQ(solve_backward(spec).j_star, 0.0);
  }
}

TEST(AnalyticCost, NonNegative) {
  for (const ProblemSpec& spec : instances::random_battery(30, 60)) EXPECT_GE(solve_backward(spec).j_star, 0.0);
}

TEST(AnalyticCost, EmptyTablesThrow) {
  EXPECT_THROW(analytic_cost(instances::s2(), ValueTables{}), MissingEntryError);
}

TEST(SolutionIo, RoundTrip) {
  for (const ProblemSpec& spec : instances::random_battery(10, 70)) {
    const SolutionBundle b = solve_backward(spec);
    const SolutionBundle again = parse_solution(solution_to_json(b), spec);
    EXPECT_TRUE(again.values.P == b.values.P);
    EXPECT_TRUE(again.values.Ptilde == b.values.Ptilde);
    EXPECT_TRUE(again.gains.K == b.gains.K);
    EXPECT_TRUE(again.gains.Ktilde == b.gains.Ktilde);
    EXPECT_EQ(again.values.e, b.values.e);
    EXPECT_EQ(again.j_star, b.j_star);
    EXPECT_EQ(again.metadata.solved_at, b.metadata.solved_at);
  }
}

TEST(SolutionIo, KeysFollowModeConvention) {
  const ProblemSpec spec = two_local_modes(0.5);
  const auto j = nlohmann::json::parse(solution_to_json(solve_backward(spec)));
  EXPECT_TRUE(j["P"]["0"]["1"].contains("empty"));
  EXPECT_TRUE(j["P"]["0"]["1"].contains("m2"));
  EXPECT_TRUE(j["Ktilde"]["0"]["1"].contains("m1"));
  EXPECT_EQ(j["e"].size(), 3u);
}

TEST(SolutionIo, ShapeMismatchRejected) {
  const std::string text = solution_to_json(solve_backward(instances::s2()));
  EXPECT_THROW(parse_solution(text, two_local_modes(0.5)), ConfigError);
  EXPECT_THROW(parse_solution("{\"P\": ", instances::s2()), ParseError);
}

}  // namespace
}  // namespace decswitch

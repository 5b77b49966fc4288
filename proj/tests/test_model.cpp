#include <filesystem>
#include <fstream>

#include <json.hpp>

#include <decswitch/instances.hpp>
#include <decswitch/model.hpp>

#include "support.hpp"

namespace decswitch {
namespace {

using nlohmann::json;
using testing::mat;
using testing::near;

json scalar_config() {
  return json::parse(R"({
    "dims": {"d_x0": 1, "d_x1": 1, "d_u0": 1, "d_u1": 1},
    "modes": {"kappa0": 1, "kappa1": 1, "pi_m0": [1.0], "pi_m1": [1.0]},
    "channel": {"p1": 0.5},
    "system": {"A00": [[1.0]], "B00": [[1.0]], "A10": [[1.0]], "A11": [[1.0]], "B10": [[1.0]], "B11": [[1.0]]},
    "cost": {"Q": [[1.0, 0.0], [0.0, 1.0]], "R": [[1.0, 0.0], [0.0, 1.0]]},
    "stoch": {"T": 1, "covW0": [[1.0]], "covW1": [[1.0]],
              "init": {"mu_x0": [0.0], "cov_x0": [[1.0]], "mu_x1": [0.0], "cov_x1": [[1.0]]}}
  })");
}

// Two global and two local modes; every per-pair block is distinct so the
// list order is observable.
json two_mode_config() {
  json j = scalar_config();
  j["modes"] = {{"kappa0", 2}, {"kappa1", 2}, {"pi_m0", {0.25, 0.75}}, {"pi_m1", {0.4, 0.6}}};
  j["system"]["A00"] = json::array({json::array({json::array({1.0})}), json::array({json::array({2.0})})});
  j["system"]["A10"] = json::array();
  for (int k = 0; k < 4; ++k) j["system"]["A10"].push_back(json::array({json::array({10.0 + k})}));
  return j;
}

ProblemSpec parse(const json& j) { return parse_problem(j.dump()); }

TEST(LoadProblem, MinimalScalarConfig) {
  const ProblemSpec spec = parse(scalar_config());
  EXPECT_EQ(spec.dims.dx(), 2);
  EXPECT_EQ(spec.dims.du(), 2);
  EXPECT_EQ(spec.kappa0(), 1);
  EXPECT_EQ(spec.horizon(), 1);
  EXPECT_EQ(spec.stoch.family, NoiseFamily::gaussian);
}

TEST(LoadProblem, ProbabilitiesMustSumToOne) {
  json j = two_mode_config();
  j["modes"]["pi_m1"] = {0.6, 0.5};
  EXPECT_THROW(parse(j), ProbabilityError);
}

TEST(LoadProblem, NegativeProbabilityRejected) {
  json j = two_mode_config();
  j["modes"]["pi_m0"] = {1.5, -0.5};
  EXPECT_THROW(parse(j), ProbabilityError);
}

TEST(LoadProblem, ChannelProbabilityRange) {
  json j = scalar_config();
  j["channel"]["p1"] = 1.2;
  EXPECT_THROW(parse(j), ProbabilityError);
  j["channel"]["p1"] = -0.1;
  EXPECT_THROW(parse(j), ProbabilityError);
}

TEST(LoadProblem, ZeroControlCostRejected) {
  json j = scalar_config();
  j["cost"]["R"] = {{0.0, 0.0}, {0.0, 0.0}};
  EXPECT_THROW(parse(j), DefinitenessError);
}

TEST(LoadProblem, WrongCostShapeNamesField) {
  json j = scalar_config();
  j["cost"]["R"] = {{0.0}};
  try {
    parse(j);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(e.field().find("cost.R"), std::string::npos) << e.field();
  }
}

TEST(LoadProblem, WrongBlockShapeNamesField) {
  json j = scalar_config();
  j["system"]["A10"] = {{1.0, 2.0}};
  try {
    parse(j);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(e.field().find("system.A10"), std::string::npos) << e.field();
  }
}

TEST(LoadProblem, RaggedMatrixIsShapeError) {
  json j = scalar_config();
  j["cost"]["Q"] = {{1.0, 0.0}, {0.0}};
  EXPECT_THROW(parse(j), ShapeError);
}

TEST(LoadProblem, WrongPairListLength) {
  json j = two_mode_config();
  j["system"]["A10"].erase(3);
  EXPECT_THROW(parse(j), ShapeError);
}

TEST(LoadProblem, IndefiniteStateCostRejected) {
  json j = scalar_config();
  j["cost"]["Q"] = {{1.0, 2.0}, {2.0, 1.0}};
  EXPECT_THROW(parse(j), DefinitenessError);
}

TEST(LoadProblem, AsymmetricCostRejected) {
  json j = scalar_config();
  j["cost"]["Q"] = {{1.0, 0.1}, {0.0, 1.0}};
  EXPECT_THROW(parse(j), DefinitenessError);
}

TEST(LoadProblem, TinyAsymmetryIsSymmetrized) {
  json j = scalar_config();
  j["cost"]["Q"] = {{1.0, 0.2 + 1e-12}, {0.2, 1.0}};
  const ProblemSpec spec = parse(j);
  EXPECT_EQ(spec.Q(0, 0, 0)(0, 1), spec.Q(0, 0, 0)(1, 0));
}

TEST(LoadProblem, IndefiniteCovarianceRejected) {
  json j = scalar_config();
  j["stoch"]["covW1"] = {{-1.0}};
  EXPECT_THROW(parse(j), DefinitenessError);
  j = scalar_config();
  j["stoch"]["init"]["cov_x0"] = {{-0.5}};
  EXPECT_THROW(parse(j), DefinitenessError);
}

TEST(LoadProblem, SingularCovarianceAccepted) {
  json j = scalar_config();
  j["dims"]["d_x0"] = 2;
  j["system"]["A00"] = {{1.0, 0.0}, {0.0, 1.0}};
  j["system"]["B00"] = {{1.0}, {0.0}};
  j["system"]["A10"] = {{1.0, 0.0}};
  j["cost"]["Q"] = {{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
  j["stoch"]["covW0"] = {{1.0, 1.0}, {1.0, 1.0}};
  j["stoch"]["init"]["mu_x0"] = {0.0, 0.0};
  j["stoch"]["init"]["cov_x0"] = {{0.0, 0.0}, {0.0, 0.0}};
  EXPECT_NO_THROW(parse(j));
}

TEST(LoadProblem, MalformedJsonReportsPosition) {
  try {
    parse_problem("{\"dims\": {\"d_x0\": 1,,}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos) << e.what();
  }
}

TEST(LoadProblem, MissingFieldNamed) {
  json j = scalar_config();
  j["stoch"].erase("covW1");
  try {
    parse(j);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("covW1"), std::string::npos) << e.what();
  }
}

TEST(LoadProblem, NonPositiveDimensionRejected) {
  json j = scalar_config();
  j["dims"]["d_u1"] = 0;
  EXPECT_THROW(parse(j), ShapeError);
}

TEST(LoadProblem, UnknownFamilyRejected) {
  json j = scalar_config();
  j["stoch"]["family"] = "laplace";
  EXPECT_THROW(parse(j), ParseError);
}

TEST(LoadProblem, MissingFileIsParseError) {
  EXPECT_THROW(load_problem("/nonexistent/problem.json"), ParseError);
}

TEST(LoadProblem, PairListsAreLocalModeMajor) {
  const ProblemSpec spec = parse(two_mode_config());
  for (int m0 = 0; m0 < 2; ++m0) {
    for (int m1 = 0; m1 < 2; ++m1) EXPECT_EQ(spec.system.A10.at(m0, m1)(0, 0), 10.0 + m1 * 2 + m0);
  }
  EXPECT_EQ(spec.system.A00[1](0, 0), 2.0);
  EXPECT_EQ(spec.system.A11.at(1, 1)(0, 0), 1.0);
}

TEST(LoadProblem, TimeVaryingCostAndNoise) {
  json j = scalar_config();
  j["cost"]["time_varying"] = true;
  j["cost"]["Q"] = {{{1.0, 0.0}, {0.0, 1.0}}, {{2.0, 0.0}, {0.0, 3.0}}};
  j["cost"]["R"] = {{{1.0, 0.0}, {0.0, 1.0}}};
  j["stoch"]["covW0"] = {{{1.0}}, {{4.0}}};
  const ProblemSpec spec = parse(j);
  EXPECT_EQ(spec.Q(1, 0, 0)(1, 1), 3.0);
  EXPECT_EQ(spec.R(1, 0, 0)(0, 0), 1.0);
  EXPECT_EQ(spec.noise_cov0(1)(0, 0), 4.0);
  EXPECT_EQ(spec.noise_cov1(1)(0, 0), 1.0);
}

TEST(LoadProblem, TimeSliceCountChecked) {
  json j = scalar_config();
  j["stoch"]["covW0"] = {{{1.0}}, {{1.0}}, {{1.0}}};
  EXPECT_THROW(parse(j), ShapeError);
}

TEST(LoadProblem, ZeroFamilyZeroesEffectiveStatistics) {
  json j = scalar_config();
  j["stoch"]["family"] = "zero";
  const ProblemSpec spec = parse(j);
  EXPECT_EQ(spec.noise_cov0(0)(0, 0), 0.0);
  EXPECT_EQ(spec.init_cov1()(0, 0), 0.0);
  EXPECT_EQ(spec.stoch.covW0[0](0, 0), 1.0);
}

TEST(AssembleSystem, ScalarHandInstance) {
  const AssembledSystem sys = assemble_system(instances::s2(), 0, 0);
  EXPECT_TRUE(near(sys.D, mat({{1, 0, 1, 0}, {1, 1, 1, 1}}), 0.0));
  EXPECT_TRUE(near(sys.A, mat({{1, 0}, {1, 1}}), 0.0));
  EXPECT_TRUE(near(sys.B, mat({{1, 0}, {1, 1}}), 0.0));
}

TEST(AssembleSystem, DecoupledLocalPlant) {
  ProblemSpec spec = instances::s2();
  spec.system.A10.at(0, 0).setZero();
  spec.system.A11.at(0, 0).setZero();
  spec.system.B10.at(0, 0).setZero();
  spec.system.B11.at(0, 0).setZero();
  const AssembledSystem sys = assemble_system(spec, 0, 0);
  EXPECT_TRUE(sys.D.bottomRows(1).isZero(0.0));
}

TEST(AssembleSystem, BlockTriangularForEveryModePair) {
  for (const ProblemSpec& spec : instances::random_battery(20, 77)) {
    const Dims& d = spec.dims;
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
        const AssembledSystem sys = assemble_system(spec, m0, m1);
        EXPECT_TRUE(sys.A.topRightCorner(d.d_x0, d.d_x1).isZero(0.0));
        EXPECT_TRUE(sys.B.topRightCorner(d.d_x0, d.d_u1).isZero(0.0));
        EXPECT_TRUE(near(sys.A.topLeftCorner(d.d_x0, d.d_x0), spec.system.A00[static_cast<std::size_t>(m0)], 0.0));
        EXPECT_TRUE(near(sys.B.bottomRightCorner(d.d_x1, d.d_u1), spec.system.B11.at(m0, m1), 0.0));
        EXPECT_TRUE(near(sys.D.leftCols(d.dx()), sys.A, 0.0));
        EXPECT_TRUE(near(sys.D.rightCols(d.du()), sys.B, 0.0));
      }
    }
  }
}

TEST(AssembleSystem, OutOfRangeModeThrows) { EXPECT_THROW(assemble_system(instances::s2(), 1, 0), IndexError); }

TEST(RoundTrip, SerializeThenParseIsIdentity) {
  for (const ProblemSpec& spec : instances::random_battery(20, 5)) {
    const ProblemSpec again = parse_problem(problem_to_json(spec));
    EXPECT_TRUE(again == spec);
    EXPECT_EQ(problem_to_json(again), problem_to_json(spec));
  }
}

TEST(RoundTrip, HandWrittenConfigs) {
  for (const json& j : {scalar_config(), two_mode_config()}) {
    const ProblemSpec spec = parse(j);
    EXPECT_TRUE(parse_problem(problem_to_json(spec)) == spec);
  }
}

TEST(RoundTrip, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "decswitch_model_roundtrip.json";
  {
    std::ofstream f(path);
    f << problem_to_json(instances::s1());
  }
  EXPECT_TRUE(load_problem(path) == instances::s1());
  std::filesystem::remove(path);
}

TEST(Instances, HandInstancesAreValid) {
  for (ProblemSpec spec : {instances::s1(), instances::s2(), instances::s2(0.0), instances::s2(1.0)}) {
    EXPECT_NO_THROW(validate_problem(spec));
  }
}

TEST(Instances, BatteryCoversEveryChannelValue) {
  const auto battery = instances::random_battery(8, 1);
  std::vector<double> seen;
  for (const auto& s : battery) seen.push_back(s.channel.p1);
  for (double p : {0.0, 0.3, 0.7, 1.0}) EXPECT_NE(std::find(seen.begin(), seen.end(), p), seen.end());
}

}  // namespace
}  // namespace decswitch

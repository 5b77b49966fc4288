#include <fstream>
#include <sstream>

#include "decswitch/model.hpp"
#include "json_util.hpp"

namespace decswitch {

using detail::json;

namespace {

// A matrix, or a list of matrices ordered m1-major (index m1 * kappa0 + m0).
PairTable<Matrix> to_pair_table(const json& j, const ModeSpec& modes, const std::string& path) {
  PairTable<Matrix> table(modes.kappa0, modes.kappa1);
  const int depth = detail::nesting_depth(j);
  if (depth == 2) {
    const Matrix M = detail::to_matrix(j, path);
    for (int m0 = 0; m0 < modes.kappa0; ++m0) {
      for (int m1 = 0; m1 < modes.kappa1; ++m1) table.at(m0, m1) = M;
    }
    return table;
  }
  if (depth != 3) throw ParseError(path + ": expected a matrix or a list of matrices");
  const std::size_t expected = static_cast<std::size_t>(modes.kappa0 * modes.kappa1);
  if (j.size() != expected) {
    throw ShapeError(path, "expected " + std::to_string(expected) + " mode-pair matrices (m1-major), got " +
                               std::to_string(j.size()));
  }
  for (int m1 = 0; m1 < modes.kappa1; ++m1) {
    for (int m0 = 0; m0 < modes.kappa0; ++m0) {
      const std::size_t k = static_cast<std::size_t>(m1 * modes.kappa0 + m0);
      table.at(m0, m1) = detail::to_matrix(j[k], path + "[" + std::to_string(k) + "]");
    }
  }
  return table;
}

json from_pair_table(const PairTable<Matrix>& table) {
  json out = json::array();
  for (int m1 = 0; m1 < table.kappa1(); ++m1) {
    for (int m0 = 0; m0 < table.kappa0(); ++m0) out.push_back(detail::from_matrix(table.at(m0, m1)));
  }
  return out;
}

// A matrix, or a list of per-m0 matrices.
std::vector<Matrix> to_mode_list(const json& j, int kappa0, const std::string& path) {
  const int depth = detail::nesting_depth(j);
  if (depth == 2) return std::vector<Matrix>(static_cast<std::size_t>(kappa0), detail::to_matrix(j, path));
  if (depth != 3) throw ParseError(path + ": expected a matrix or a list of matrices");
  if (static_cast<int>(j.size()) != kappa0) {
    throw ShapeError(path, "expected " + std::to_string(kappa0) + " matrices (one per global mode), got " +
                               std::to_string(j.size()));
  }
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(detail::to_matrix(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// A matrix (time-invariant) or a list of per-t matrices.
std::vector<Matrix> to_time_list(const json& j, const std::string& path) {
  const int depth = detail::nesting_depth(j);
  if (depth == 2) return {detail::to_matrix(j, path)};
  if (depth != 3) throw ParseError(path + ": expected a matrix or a list of per-t matrices");
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(detail::to_matrix(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<PairTable<Matrix>> to_cost_slices(const json& j, bool time_varying, const ModeSpec& modes,
                                              const std::string& path) {
  if (!time_varying) return {to_pair_table(j, modes, path)};
  if (!j.is_array() || j.empty()) throw ParseError(path + ": expected a non-empty list of per-t entries");
  std::vector<PairTable<Matrix>> out;
  for (std::size_t t = 0; t < j.size(); ++t) out.push_back(to_pair_table(j[t], modes, path + "[" + std::to_string(t) + "]"));
  return out;
}

std::vector<double> to_probabilities(const json& j, const std::string& path) {
  const Vector v = detail::to_vector(j, path);
  return {v.data(), v.data() + v.size()};
}

ProblemSpec from_json(const json& root) {
  ProblemSpec spec;
  const json& dims = detail::require_field(root, "dims", "config");
  spec.dims.d_x0 = detail::to_int(detail::require_field(dims, "d_x0", "dims"), "dims.d_x0");
  spec.dims.d_x1 = detail::to_int(detail::require_field(dims, "d_x1", "dims"), "dims.d_x1");
  spec.dims.d_u0 = detail::to_int(detail::require_field(dims, "d_u0", "dims"), "dims.d_u0");
  spec.dims.d_u1 = detail::to_int(detail::require_field(dims, "d_u1", "dims"), "dims.d_u1");

  const json& modes = detail::require_field(root, "modes", "config");
  spec.modes.kappa0 = detail::to_int(detail::require_field(modes, "kappa0", "modes"), "modes.kappa0");
  spec.modes.kappa1 = detail::to_int(detail::require_field(modes, "kappa1", "modes"), "modes.kappa1");
  if (spec.modes.kappa0 < 1) throw ShapeError("modes.kappa0", "must be >= 1");
  if (spec.modes.kappa1 < 1) throw ShapeError("modes.kappa1", "must be >= 1");
  spec.modes.pi_m0 = to_probabilities(detail::require_field(modes, "pi_m0", "modes"), "modes.pi_m0");
  spec.modes.pi_m1 = to_probabilities(detail::require_field(modes, "pi_m1", "modes"), "modes.pi_m1");

  const json& channel = detail::require_field(root, "channel", "config");
  spec.channel.p1 = detail::to_number(detail::require_field(channel, "p1", "channel"), "channel.p1");

  const json& system = detail::require_field(root, "system", "config");
  spec.system.A00 = to_mode_list(detail::require_field(system, "A00", "system"), spec.modes.kappa0, "system.A00");
  spec.system.B00 = to_mode_list(detail::require_field(system, "B00", "system"), spec.modes.kappa0, "system.B00");
  spec.system.A10 = to_pair_table(detail::require_field(system, "A10", "system"), spec.modes, "system.A10");
  spec.system.A11 = to_pair_table(detail::require_field(system, "A11", "system"), spec.modes, "system.A11");
  spec.system.B10 = to_pair_table(detail::require_field(system, "B10", "system"), spec.modes, "system.B10");
  spec.system.B11 = to_pair_table(detail::require_field(system, "B11", "system"), spec.modes, "system.B11");

  const json& cost = detail::require_field(root, "cost", "config");
  bool time_varying = false;
  if (auto it = cost.find("time_varying"); it != cost.end()) {
    if (!it->is_boolean()) throw ParseError("cost.time_varying: expected a boolean");
    time_varying = it->get<bool>();
  }
  spec.cost.time_varying = time_varying;
  spec.cost.Q = to_cost_slices(detail::require_field(cost, "Q", "cost"), time_varying, spec.modes, "cost.Q");
  spec.cost.R = to_cost_slices(detail::require_field(cost, "R", "cost"), time_varying, spec.modes, "cost.R");

  const json& stoch = detail::require_field(root, "stoch", "config");
  spec.stoch.T = detail::to_int(detail::require_field(stoch, "T", "stoch"), "stoch.T");
  spec.stoch.covW0 = to_time_list(detail::require_field(stoch, "covW0", "stoch"), "stoch.covW0");
  spec.stoch.covW1 = to_time_list(detail::require_field(stoch, "covW1", "stoch"), "stoch.covW1");
  const json& init = detail::require_field(stoch, "init", "stoch");
  spec.stoch.mu_x0 = detail::to_vector(detail::require_field(init, "mu_x0", "stoch.init"), "stoch.init.mu_x0");
  spec.stoch.mu_x1 = detail::to_vector(detail::require_field(init, "mu_x1", "stoch.init"), "stoch.init.mu_x1");
  spec.stoch.cov_x0 = detail::to_matrix(detail::require_field(init, "cov_x0", "stoch.init"), "stoch.init.cov_x0");
  spec.stoch.cov_x1 = detail::to_matrix(detail::require_field(init, "cov_x1", "stoch.init"), "stoch.init.cov_x1");
  if (auto it = stoch.find("family"); it != stoch.end()) {
    if (!it->is_string()) throw ParseError("stoch.family: expected a string");
    const std::string family = it->get<std::string>();
    if (family == "gaussian") {
      spec.stoch.family = NoiseFamily::gaussian;
    } else if (family == "zero") {
      spec.stoch.family = NoiseFamily::zero;
    } else {
      throw ParseError("stoch.family: unknown family '" + family + "'");
    }
  }
  return spec;
}

}  // namespace

ProblemSpec parse_problem(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  ProblemSpec spec = from_json(root);
  validate_problem(spec);
  return spec;
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_problem(buffer.str());
}

std::string problem_to_json(const ProblemSpec& spec, int indent) {
  json root;
  root["dims"] = {{"d_x0", spec.dims.d_x0}, {"d_x1", spec.dims.d_x1}, {"d_u0", spec.dims.d_u0}, {"d_u1", spec.dims.d_u1}};
  root["modes"] = {{"kappa0", spec.modes.kappa0},
                   {"kappa1", spec.modes.kappa1},
                   {"pi_m0", spec.modes.pi_m0},
                   {"pi_m1", spec.modes.pi_m1}};
  root["channel"] = {{"p1", spec.channel.p1}};

  json system;
  system["A00"] = json::array();
  system["B00"] = json::array();
  for (const Matrix& M : spec.system.A00) system["A00"].push_back(detail::from_matrix(M));
  for (const Matrix& M : spec.system.B00) system["B00"].push_back(detail::from_matrix(M));
  system["A10"] = from_pair_table(spec.system.A10);
  system["A11"] = from_pair_table(spec.system.A11);
  system["B10"] = from_pair_table(spec.system.B10);
  system["B11"] = from_pair_table(spec.system.B11);
  root["system"] = std::move(system);

  json cost;
  cost["time_varying"] = spec.cost.time_varying;
  auto emit_cost = [&](const std::vector<PairTable<Matrix>>& slices) {
    if (!spec.cost.time_varying) return from_pair_table(slices.front());
    json out = json::array();
    for (const auto& slice : slices) out.push_back(from_pair_table(slice));
    return out;
  };
  cost["Q"] = emit_cost(spec.cost.Q);
  cost["R"] = emit_cost(spec.cost.R);
  root["cost"] = std::move(cost);

  auto emit_time = [](const std::vector<Matrix>& slices) {
    if (slices.size() == 1) return detail::from_matrix(slices.front());
    json out = json::array();
    for (const Matrix& M : slices) out.push_back(detail::from_matrix(M));
    return out;
  };
  json stoch;
  stoch["T"] = spec.stoch.T;
  stoch["covW0"] = emit_time(spec.stoch.covW0);
  stoch["covW1"] = emit_time(spec.stoch.covW1);
  stoch["init"] = {{"mu_x0", detail::from_vector(spec.stoch.mu_x0)},
                   {"cov_x0", detail::from_matrix(spec.stoch.cov_x0)},
                   {"mu_x1", detail::from_vector(spec.stoch.mu_x1)},
                   {"cov_x1", detail::from_matrix(spec.stoch.cov_x1)}};
  stoch["family"] = spec.stoch.family == NoiseFamily::gaussian ? "gaussian" : "zero";
  root["stoch"] = std::move(stoch);
  return root.dump(indent);
}

}  // namespace decswitch

#include <fstream>
#include <sstream>

#include "decswitch/solver.hpp"
#include "json_util.hpp"

namespace decswitch {

using detail::json;

namespace {

json table_to_json(const std::vector<MatrixTable>& tables) {
  json out = json::object();
  for (std::size_t t = 0; t < tables.size(); ++t) {
    json per_t = json::object();
    const MatrixTable& table = tables[t];
    for (int m0 = 0; m0 < table.kappa0(); ++m0) {
      json per_m0 = json::object();
      for (ZTilde z : table.ztildes()) per_m0[z.key()] = detail::from_matrix(table.at(m0, z));
      per_t[std::to_string(m0 + 1)] = std::move(per_m0);
    }
    out[std::to_string(t)] = std::move(per_t);
  }
  return out;
}

json pair_tables_to_json(const std::vector<PairTable<Matrix>>& tables) {
  json out = json::object();
  for (std::size_t t = 0; t < tables.size(); ++t) {
    json per_t = json::object();
    const PairTable<Matrix>& table = tables[t];
    for (int m0 = 0; m0 < table.kappa0(); ++m0) {
      json per_m0 = json::object();
      for (int m1 = 0; m1 < table.kappa1(); ++m1) {
        per_m0[ZTilde::local(m1).key()] = detail::from_matrix(table.at(m0, m1));
      }
      per_t[std::to_string(m0 + 1)] = std::move(per_m0);
    }
    out[std::to_string(t)] = std::move(per_t);
  }
  return out;
}

struct Shape {
  Eigen::Index rows, cols;
};

Matrix read_entry(const json& root, const char* name, std::size_t t, int m0, const std::string& key, Shape shape) {
  const std::string path = std::string(name) + "[" + std::to_string(t) + "][" + std::to_string(m0 + 1) + "][" + key + "]";
  const json& per_t = detail::require_field(root, std::to_string(t).c_str(), name);
  const json& per_m0 = detail::require_field(per_t, std::to_string(m0 + 1).c_str(), path);
  const json& entry = detail::require_field(per_m0, key.c_str(), path);
  Matrix M = detail::to_matrix(entry, path);
  if (M.rows() != shape.rows || M.cols() != shape.cols) {
    throw ShapeError(path, "expected " + std::to_string(shape.rows) + "x" + std::to_string(shape.cols));
  }
  return M;
}

}  // namespace

std::string solution_to_json(const SolutionBundle& bundle, int indent) {
  json root;
  root["P"] = table_to_json(bundle.values.P);
  root["Ptilde"] = table_to_json(bundle.values.Ptilde);
  root["K"] = table_to_json(bundle.gains.K);
  root["Ktilde"] = pair_tables_to_json(bundle.gains.Ktilde);
  root["e"] = bundle.values.e;
  root["j_star"] = bundle.j_star;
  root["metadata"] = {{"psd_tolerance", bundle.metadata.psd_tolerance},
                      {"pd_tolerance", bundle.metadata.pd_tolerance},
                      {"solved_at", bundle.metadata.solved_at}};
  return root.dump(indent);
}

SolutionBundle parse_solution(std::string_view json_text, const ProblemSpec& spec) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed solution JSON: ") + e.what());
  }
  const Dims& d = spec.dims;
  const int k0 = spec.kappa0();
  const int k1 = spec.kappa1();
  const auto slices = static_cast<std::size_t>(spec.horizon() + 2);

  SolutionBundle bundle;
  const json& P = detail::require_field(root, "P", "solution");
  const json& Ptilde = detail::require_field(root, "Ptilde", "solution");
  const json& K = detail::require_field(root, "K", "solution");
  const json& Ktilde = detail::require_field(root, "Ktilde", "solution");

  for (std::size_t t = 0; t < slices; ++t) {
    MatrixTable Pt(k0, k1), Ptt(k0, k1);
    for (int m0 = 0; m0 < k0; ++m0) {
      for (ZTilde z : Pt.ztildes()) {
        Pt.at(m0, z) = read_entry(P, "P", t, m0, z.key(), {d.dx(), d.dx()});
        Ptt.at(m0, z) = read_entry(Ptilde, "Ptilde", t, m0, z.key(), {d.d_x1, d.d_x1});
      }
    }
    bundle.values.P.push_back(std::move(Pt));
    bundle.values.Ptilde.push_back(std::move(Ptt));
  }
  for (std::size_t t = 0; t + 1 < slices; ++t) {
    MatrixTable Kt(k0, k1);
    PairTable<Matrix> Ktt(k0, k1);
    for (int m0 = 0; m0 < k0; ++m0) {
      for (ZTilde z : Kt.ztildes()) {
        const Eigen::Index rows = z.is_empty() ? d.d_u0 + k1 * d.d_u1 : d.du();
        Kt.at(m0, z) = read_entry(K, "K", t, m0, z.key(), {rows, d.dx()});
      }
      for (int m1 = 0; m1 < k1; ++m1) {
        Ktt.at(m0, m1) = read_entry(Ktilde, "Ktilde", t, m0, ZTilde::local(m1).key(), {d.d_u1, d.d_x1});
      }
    }
    bundle.gains.K.push_back(std::move(Kt));
    bundle.gains.Ktilde.push_back(std::move(Ktt));
  }

  const json& e = detail::require_field(root, "e", "solution");
  if (!e.is_array() || e.size() != slices) throw ShapeError("solution.e", "expected T+2 entries");
  for (std::size_t t = 0; t < slices; ++t) bundle.values.e.push_back(detail::to_number(e[t], "solution.e"));
  bundle.j_star = detail::to_number(detail::require_field(root, "j_star", "solution"), "solution.j_star");
  if (auto it = root.find("metadata"); it != root.end() && it->is_object()) {
    bundle.metadata.psd_tolerance = it->value("psd_tolerance", bundle.metadata.psd_tolerance);
    bundle.metadata.pd_tolerance = it->value("pd_tolerance", bundle.metadata.pd_tolerance);
    bundle.metadata.solved_at = it->value("solved_at", std::string{});
  }
  return bundle;
}

SolutionBundle load_solution(const std::filesystem::path& path, const ProblemSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open solution file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_solution(buffer.str(), spec);
}

}  // namespace decswitch

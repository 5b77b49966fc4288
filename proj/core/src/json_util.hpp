#pragma once

// Private helpers shared by the JSON readers and writers.

#include <string>
#include <vector>

#include <json.hpp>

#include "decswitch/errors.hpp"
#include "decswitch/matkit.hpp"

namespace decswitch::detail {

using json = nlohmann::json;

inline int nesting_depth(const json& j) {
  if (!j.is_array()) return 0;
  if (j.empty()) return 1;
  return 1 + nesting_depth(j.front());
}

inline const json& require_field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing field " + path + "." + key);
  return *it;
}

inline double to_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

inline int to_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
  return j.get<int>();
}

inline Vector to_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = to_number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

/// Row-major nested array -> matrix. Ragged rows are a ShapeError.
inline Matrix to_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError(path + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j.front().is_array()) throw ParseError(path + ": expected a matrix (array of rows)");
  const std::size_t cols = j.front().size();
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array()) throw ParseError(path + ": row " + std::to_string(r) + " is not an array");
    if (row.size() != cols) throw ShapeError(path, "ragged row " + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          to_number(row[c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return M;
}

inline json from_matrix(const Matrix& M) {
  json out = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

inline json from_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace decswitch::detail

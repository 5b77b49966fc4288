#pragma once

#include <string>

#include <gtest/gtest.h>

#include <decswitch/model.hpp>

namespace decswitch::testing {

inline ::testing::AssertionResult near(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return ::testing::AssertionFailure() << "shape " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
                                         << b.cols();
  }
  const double d = a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
  if (d <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "max difference " << d << " > " << tol << "\n" << a << "\nvs\n" << b;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// Same problem with deterministic noise and initial state fixed at the means.
inline ProblemSpec deterministic(ProblemSpec spec) {
  spec.stoch.family = NoiseFamily::zero;
  return spec;
}

}  // namespace decswitch::testing

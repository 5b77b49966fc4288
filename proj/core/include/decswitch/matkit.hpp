#pragma once

#include <Eigen/Dense>

namespace decswitch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Dims;

namespace matkit {

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kDefinitenessTol = 1e-10;

/// Quadratic form x' G x.
double qf(const Matrix& G, const Vector& x);

/// (M + M') / 2.
Matrix symmetrize(const Matrix& M);

/// Largest absolute deviation from symmetry; throws DimensionError if not square.
double asymmetry(const Matrix& M);

/// Leading-block size of a square matrix viewed as [[G11, G12], [G21, G22]].
struct BlockPartition {
  int n_top;
};

/// G11 - G12 * G22^{-1} * G21, symmetrized. G22 is factorized, never inverted.
/// Throws SingularBlockError if G22 is not PD (min eig <= 1e-10 * max(1, |G|)).
Matrix schur_complement(const Matrix& G, BlockPartition part);

/// Four copies of the blocks of a square matrix split after the first n_x
/// rows and columns.
struct Partitioned {
  Matrix XX, XU, UX, UU;
};
Partitioned partition(const Matrix& H, int n_x);

/// Selector that picks (x, u0, qbar(m1)) out of (x, u0, qbar(1), ..., qbar(kappa1)).
/// `m1` is 0-based.
Matrix build_L(const Dims& dims, int kappa1, int m1);

/// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
double min_eigenvalue(const Matrix& M);

/// Scale used by the relative definiteness tests: max(1, |M|_2).
double definiteness_scale(const Matrix& M);

/// Throws DefinitenessError unless min eig >= -tol * max(1, |M|).
void assert_psd(const Matrix& M, double tol = kDefinitenessTol);

/// Throws DefinitenessError unless min eig > tol * max(1, |M|).
void assert_pd(const Matrix& M, double tol = kDefinitenessTol);

/// Exact (bitwise) equality including shape.
inline bool identical(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}
inline bool identical(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.size() == 0 || a == b);
}
inline bool identical(double a, double b) { return a == b; }

/// Block-diagonal concatenation.
Matrix blockdiag(const Matrix& a, const Matrix& b);

}  // namespace matkit
}  // namespace decswitch

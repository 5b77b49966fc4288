#include "decswitch/matkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "decswitch/errors.hpp"
#include "decswitch/model.hpp"

namespace decswitch::matkit {

namespace {

void require_square(const Matrix& M, const char* what) {
  if (M.rows() != M.cols()) {
    throw DimensionError(std::string(what) + ": matrix is " + std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()) + ", expected square");
  }
}

void require_symmetric(const Matrix& M, const char* what) {
  require_square(M, what);
  const double asym = asymmetry(M);
  if (asym > kSymmetryTol * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    throw DefinitenessError(std::string(what) + ": matrix is not symmetric", std::nan(""));
  }
}

}  // namespace

double qf(const Matrix& G, const Vector& x) {
  if (G.rows() != G.cols() || G.rows() != x.size()) {
    throw DimensionError("qf: G is " + std::to_string(G.rows()) + "x" + std::to_string(G.cols()) +
                         " but x has length " + std::to_string(x.size()));
  }
  return x.dot(G * x);
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double asymmetry(const Matrix& M) {
  require_square(M, "asymmetry");
  if (M.size() == 0) return 0.0;
  return (M - M.transpose()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(M), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double definiteness_scale(const Matrix& M) {
  if (M.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(M), Eigen::EigenvaluesOnly);
  return std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
}

void assert_psd(const Matrix& M, double tol) {
  require_symmetric(M, "assert_psd");
  const double lo = min_eigenvalue(M);
  if (lo < -tol * definiteness_scale(M)) {
    throw DefinitenessError("matrix is not positive semi-definite", lo);
  }
}

void assert_pd(const Matrix& M, double tol) {
  require_symmetric(M, "assert_pd");
  const double lo = min_eigenvalue(M);
  if (!(lo > tol * definiteness_scale(M))) {
    throw DefinitenessError("matrix is not positive definite", lo);
  }
}

Matrix schur_complement(const Matrix& G, BlockPartition part) {
  require_square(G, "schur_complement");
  const Eigen::Index n = G.rows();
  const Eigen::Index k = part.n_top;
  if (k <= 0 || k >= n) {
    throw DimensionError("schur_complement: split " + std::to_string(k) + " out of range for size " +
                         std::to_string(n));
  }
  const Eigen::Index m = n - k;
  const Matrix G22 = symmetrize(G.bottomRightCorner(m, m));
  const double lo = min_eigenvalue(G22);
  if (!(lo > kDefinitenessTol * definiteness_scale(G))) {
    throw SingularBlockError("schur_complement: trailing block is not positive definite (min eigenvalue " +
                                 std::to_string(lo) + ")",
                             lo);
  }
  Eigen::LLT<Matrix> llt(G22);
  const Matrix X = llt.solve(G.bottomLeftCorner(m, k));
  return symmetrize(G.topLeftCorner(k, k) - G.topRightCorner(k, m) * X);
}

Partitioned partition(const Matrix& H, int n_x) {
  require_square(H, "partition");
  const Eigen::Index n = H.rows();
  if (n_x <= 0 || n_x >= n) {
    throw DimensionError("partition: n_x=" + std::to_string(n_x) + " out of range for size " +
                         std::to_string(n));
  }
  const Eigen::Index nu = n - n_x;
  return {H.topLeftCorner(n_x, n_x), H.topRightCorner(n_x, nu), H.bottomLeftCorner(nu, n_x),
          H.bottomRightCorner(nu, nu)};
}

Matrix build_L(const Dims& dims, int kappa1, int m1) {
  if (kappa1 < 1 || m1 < 0 || m1 >= kappa1) {
    throw IndexError("build_L: local mode " + std::to_string(m1 + 1) + " outside 1.." +
                     std::to_string(kappa1));
  }
  const int lead = dims.dx() + dims.d_u0;
  Matrix L = Matrix::Zero(lead + dims.d_u1, lead + kappa1 * dims.d_u1);
  L.topLeftCorner(lead, lead).setIdentity();
  L.block(lead, lead + m1 * dims.d_u1, dims.d_u1, dims.d_u1).setIdentity();
  return L;
}

Matrix blockdiag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace decswitch::matkit

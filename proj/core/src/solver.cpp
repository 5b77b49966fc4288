#include "decswitch/solver.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

namespace decswitch {

namespace {

std::string context(int t, int m0, ZTilde z) {
  return "t=" + std::to_string(t) + " m0=" + std::to_string(m0 + 1) + " ztilde=" + z.key();
}

const Matrix& require_entry(const MatrixTable& G, int m0, ZTilde z) {
  const Matrix& M = G.at(m0, z);
  if (M.size() == 0) throw MissingEntryError("operator input missing entry (" + std::to_string(m0 + 1) + ", " + z.key() + ")");
  return M;
}

Matrix schur_at(const Matrix& H, int n_top, int t, int m0, ZTilde z) {
  try {
    return matkit::schur_complement(H, {n_top});
  } catch (const SingularBlockError& e) {
    throw SingularBlockError(context(t, m0, z) + ": " + e.what(), e.min_eigenvalue());
  }
}

// -(H_UU)^{-1} H_UX. H_UU has already passed the PD test in schur_at.
Matrix gain_from(const Matrix& H, int n_x) {
  const Eigen::Index nu = H.rows() - n_x;
  Eigen::LLT<Matrix> llt(matkit::symmetrize(H.bottomRightCorner(nu, nu)));
  return -llt.solve(H.bottomLeftCorner(nu, n_x));
}

void check_value_psd(const Matrix& M, double tol, const std::string& what) {
  const double lo = matkit::min_eigenvalue(M);
  if (lo < -tol * matkit::definiteness_scale(M)) {
    throw DefinitenessError(what + " lost positive semi-definiteness", lo);
  }
}

MatrixTable bottom_right_blocks(const MatrixTable& P, int n) {
  MatrixTable out(P.kappa0(), P.kappa1());
  for (int m0 = 0; m0 < P.kappa0(); ++m0) {
    for (ZTilde z : P.ztildes()) {
      const Matrix& M = P.at(m0, z);
      out.at(m0, z) = M.bottomRightCorner(n, n);
    }
  }
  return out;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Matrix op_pi_gamma(const MatrixTable& G, const ProblemSpec& spec, int gamma) {
  if (G.kappa0() != spec.kappa0() || G.kappa1() != spec.kappa1()) {
    throw MissingEntryError("operator input has the wrong mode-table shape");
  }
  Matrix out;
  for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
    if (gamma == 0) {
      const Matrix& M = require_entry(G, m0, ZTilde::empty());
      if (out.size() == 0) out = Matrix::Zero(M.rows(), M.cols());
      out += spec.pi0(m0) * M;
    } else {
      for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
        const Matrix& M = require_entry(G, m0, ZTilde::local(m1));
        if (out.size() == 0) out = Matrix::Zero(M.rows(), M.cols());
        out += spec.pi0(m0) * spec.pi1(m1) * M;
      }
    }
  }
  return out;
}

Matrix op_pi(const MatrixTable& G, const ProblemSpec& spec) { return op_psi(G, G, spec); }

Matrix op_psi(const MatrixTable& G1, const MatrixTable& G2, const ProblemSpec& spec) {
  return spec.channel.p0() * op_pi_gamma(G1, spec, 0) + spec.channel.p1 * op_pi_gamma(G2, spec, 1);
}

StaticMatrices build_static(const ProblemSpec& spec) {
  const Dims& d = spec.dims;
  const int k0 = spec.kappa0();
  const int k1 = spec.kappa1();
  const int slices = spec.horizon() + 1;

  std::vector<Matrix> L;
  for (int m1 = 0; m1 < k1; ++m1) L.push_back(matkit::build_L(d, k1, m1));

  StaticMatrices out;
  out.D = PairTable<Matrix>(k0, k1);
  out.D11 = PairTable<Matrix>(k0, k1);
  out.Daug = PairTable<Matrix>(k0, k1);
  for (int m0 = 0; m0 < k0; ++m0) {
    Matrix Dempty = Matrix::Zero(d.dx(), d.dx() + d.d_u0 + k1 * d.d_u1);
    for (int m1 = 0; m1 < k1; ++m1) {
      out.D.at(m0, m1) = assemble_system(spec, m0, m1).D;
      Matrix D11(d.d_x1, d.d_x1 + d.d_u1);
      D11 << spec.system.A11.at(m0, m1), spec.system.B11.at(m0, m1);
      out.D11.at(m0, m1) = std::move(D11);
      out.Daug.at(m0, m1) = out.D.at(m0, m1) * L[static_cast<std::size_t>(m1)];
      Dempty += spec.pi1(m1) * out.Daug.at(m0, m1);
    }
    out.Dempty.push_back(std::move(Dempty));
  }

  for (int t = 0; t < slices; ++t) {
    PairTable<Matrix> C(k0, k1), C11(k0, k1);
    std::vector<Matrix> Cempty;
    for (int m0 = 0; m0 < k0; ++m0) {
      Matrix acc = Matrix::Zero(d.dx() + d.d_u0 + k1 * d.d_u1, d.dx() + d.d_u0 + k1 * d.d_u1);
      for (int m1 = 0; m1 < k1; ++m1) {
        const Matrix& Q = spec.Q(t, m0, m1);
        const Matrix& R = spec.R(t, m0, m1);
        C.at(m0, m1) = matkit::blockdiag(Q, R);
        C11.at(m0, m1) = matkit::blockdiag(Q.bottomRightCorner(d.d_x1, d.d_x1), R.bottomRightCorner(d.d_u1, d.d_u1));
        const Matrix& Lm = L[static_cast<std::size_t>(m1)];
        acc += spec.pi1(m1) * (Lm.transpose() * C.at(m0, m1) * Lm);
      }
      Cempty.push_back(matkit::symmetrize(acc));
    }
    out.C.push_back(std::move(C));
    out.C11.push_back(std::move(C11));
    out.Cempty.push_back(std::move(Cempty));
  }
  return out;
}

StageMatrices backward_step(const ProblemSpec& spec, const StaticMatrices& stat, int t, ValueTables& values,
                            GainTables& gains) {
  const Dims& d = spec.dims;
  const int k0 = spec.kappa0();
  const int k1 = spec.kappa1();
  const auto tn = static_cast<std::size_t>(t);
  const MatrixTable& P_next = values.P[tn + 1];
  const MatrixTable& Ptilde_next = values.Ptilde[tn + 1];

  const Matrix PiP = op_pi(P_next, spec);
  const Matrix Psi = op_psi(Ptilde_next, bottom_right_blocks(P_next, d.d_x1), spec);

  StageMatrices stage;
  stage.H = MatrixTable(k0, k1);
  stage.Htilde = PairTable<Matrix>(k0, k1);
  MatrixTable& P = values.P[tn];
  MatrixTable& Ptilde = values.Ptilde[tn];
  P = MatrixTable(k0, k1);
  Ptilde = MatrixTable(k0, k1);
  gains.K[tn] = MatrixTable(k0, k1);
  gains.Ktilde[tn] = PairTable<Matrix>(k0, k1);
  const double tol = 1e-9;

  for (int m0 = 0; m0 < k0; ++m0) {
    const auto m0n = static_cast<std::size_t>(m0);
    const Matrix& Dempty = stat.Dempty[m0n];

    // Packet lost: the global controller averages over the unknown local mode.
    const Matrix E = matkit::symmetrize(Dempty.transpose() * PiP * Dempty);
    Matrix F = Matrix::Zero(E.rows(), E.cols());
    for (int m1 = 0; m1 < k1; ++m1) {
      const auto row1 = stat.Daug.at(m0, m1).bottomRows(d.d_x1);
      F += spec.pi1(m1) * (row1.transpose() * Psi * row1);
    }
    const auto empty_row1 = Dempty.bottomRows(d.d_x1);
    F -= empty_row1.transpose() * Psi * empty_row1;
    F = matkit::symmetrize(F);

    const ZTilde none = ZTilde::empty();
    Matrix H_empty = matkit::symmetrize(stat.Cempty[tn][m0n] + E + F);
    P.at(m0, none) = schur_at(H_empty, d.dx(), t, m0, none);
    gains.K[tn].at(m0, none) = gain_from(H_empty, d.dx());
    check_value_psd(P.at(m0, none), tol, "P at " + context(t, m0, none));
    stage.H.at(m0, none) = std::move(H_empty);
    stage.Eempty.push_back(E);
    stage.Fempty.push_back(F);

    Matrix Ptilde_empty = Matrix::Zero(d.d_x1, d.d_x1);
    for (int m1 = 0; m1 < k1; ++m1) {
      const ZTilde z = ZTilde::local(m1);
      const Matrix& D = stat.D.at(m0, m1);
      Matrix H = matkit::symmetrize(stat.C[tn].at(m0, m1) + D.transpose() * PiP * D);
      P.at(m0, z) = schur_at(H, d.dx(), t, m0, z);
      gains.K[tn].at(m0, z) = gain_from(H, d.dx());
      check_value_psd(P.at(m0, z), tol, "P at " + context(t, m0, z));
      stage.H.at(m0, z) = std::move(H);

      const Matrix& D11 = stat.D11.at(m0, m1);
      Matrix Htilde = matkit::symmetrize(stat.C11[tn].at(m0, m1) + D11.transpose() * Psi * D11);
      Matrix sc = schur_at(Htilde, d.d_x1, t, m0, z);
      check_value_psd(sc, tol, "Ptilde at " + context(t, m0, z));
      gains.Ktilde[tn].at(m0, m1) = gain_from(Htilde, d.d_x1);
      Ptilde_empty += spec.pi1(m1) * sc;
      Ptilde.at(m0, z) = std::move(sc);
      stage.Htilde.at(m0, m1) = std::move(Htilde);
    }
    Ptilde.at(m0, none) = matkit::symmetrize(Ptilde_empty);
  }

  values.e[tn] = values.e[tn + 1] + (PiP.topLeftCorner(d.d_x0, d.d_x0) * spec.noise_cov0(t)).trace() +
                 (Psi * spec.noise_cov1(t)).trace();
  return stage;
}

SolutionBundle solve_backward(const ProblemSpec& spec) {
  const Dims& d = spec.dims;
  const int T = spec.horizon();
  const int k0 = spec.kappa0();
  const int k1 = spec.kappa1();
  const auto slices = static_cast<std::size_t>(T + 2);

  SolutionBundle bundle;
  ValueTables& values = bundle.values;
  values.P.resize(slices);
  values.Ptilde.resize(slices);
  values.e.assign(slices, 0.0);
  values.P.back() = MatrixTable(k0, k1, Matrix::Zero(d.dx(), d.dx()));
  values.Ptilde.back() = MatrixTable(k0, k1, Matrix::Zero(d.d_x1, d.d_x1));

  bundle.gains.K.resize(slices - 1);
  bundle.gains.Ktilde.resize(slices - 1);

  const StaticMatrices stat = build_static(spec);
  for (int t = T; t >= 0; --t) backward_step(spec, stat, t, values, bundle.gains);

  bundle.j_star = analytic_cost(spec, values);
  bundle.metadata.solved_at = utc_now();
  return bundle;
}

double analytic_cost(const ProblemSpec& spec, const ValueTables& values) {
  const Dims& d = spec.dims;
  if (values.P.empty() || values.Ptilde.empty() || values.e.empty()) {
    throw MissingEntryError("analytic_cost: value tables are empty");
  }
  const MatrixTable& P0 = values.P.front();
  const MatrixTable& Ptilde0 = values.Ptilde.front();
  Vector mu(d.dx());
  mu << spec.stoch.mu_x0, spec.stoch.mu_x1;
  const Matrix cov0 = spec.init_cov0();
  const Matrix cov1 = spec.init_cov1();

  // X_0^0 and X_0^1 are independent, so only the diagonal blocks of P meet
  // the initial covariances.
  auto second_moment = [&](const Matrix& P) {
    return matkit::qf(P, mu) + (P.topLeftCorner(d.d_x0, d.d_x0) * cov0).trace();
  };

  double lost = 0.0;
  double delivered = 0.0;
  for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
    const ZTilde none = ZTilde::empty();
    // Belief is the prior: its mean enters P, its covariance enters Ptilde.
    lost += spec.pi0(m0) * (second_moment(P0.at(m0, none)) + (Ptilde0.at(m0, none) * cov1).trace());
    for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
      // Belief is a point mass at X_0^1.
      const Matrix& P = P0.at(m0, ZTilde::local(m1));
      delivered += spec.pi0(m0) * spec.pi1(m1) *
                   (second_moment(P) + (P.bottomRightCorner(d.d_x1, d.d_x1) * cov1).trace());
    }
  }
  return spec.channel.p0() * lost + spec.channel.p1 * delivered + values.e.front();
}

}  // namespace decswitch

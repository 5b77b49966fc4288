#include "decswitch/control.hpp"

namespace decswitch {

namespace {

// [D(m0, m1)]_{1.} applied to (x0, x1, u0, u1): the local-plant rows of the
// dynamics.
Vector local_rows(const ProblemSpec& spec, int m0, int m1, const Vector& x0, const Vector& x1, const Vector& u0,
                  const Vector& u1) {
  const SystemBlocks& s = spec.system;
  return s.A10.at(m0, m1) * x0 + s.A11.at(m0, m1) * x1 + s.B10.at(m0, m1) * u0 + s.B11.at(m0, m1) * u1;
}

Vector stack(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace

Observation observe(const Vector& x0, int m0, const Vector& x1, int m1, int gamma) {
  Observation obs;
  obs.x0 = x0;
  obs.m0 = m0;
  obs.gamma = gamma ? 1 : 0;
  obs.x1 = x1;
  obs.m1 = m1;
  if (obs.gamma) {
    obs.z = x1;
    obs.ztilde = ZTilde::local(m1);
  }
  return obs;
}

EstimatorState estimator_init(const ProblemSpec& spec, const Observation& obs0) {
  if (obs0.z) return {*obs0.z};
  return {spec.stoch.mu_x1};
}

Prescription compute_prescription(const ProblemSpec& spec, const GainTables& gains, int t, int m0, ZTilde ztilde,
                                  const Vector& x0, const EstimatorState& est) {
  if (t < 0 || t >= static_cast<int>(gains.K.size())) {
    throw IndexError("compute_prescription: t=" + std::to_string(t) + " outside 0..T");
  }
  const Dims& d = spec.dims;
  const int k1 = spec.kappa1();
  const auto tn = static_cast<std::size_t>(t);
  const Vector v = gains.K[tn].at(m0, ztilde) * stack(x0, est.x_hat1);

  Prescription p;
  p.ztilde = ztilde;
  p.m0 = m0;
  p.u0 = v.head(d.d_u0);
  p.qbar.assign(static_cast<std::size_t>(k1), Vector::Zero(d.d_u1));
  if (ztilde.is_empty()) {
    for (int m1 = 0; m1 < k1; ++m1) {
      p.qbar[static_cast<std::size_t>(m1)] = v.segment(d.d_u0 + m1 * d.d_u1, d.d_u1);
      p.ktilde.push_back(gains.Ktilde[tn].at(m0, m1));
    }
  } else {
    // The other modes' means and the innovation law are free; fixed to zero.
    p.qbar[static_cast<std::size_t>(ztilde.mode())] = v.tail(d.d_u1);
    p.ktilde.assign(static_cast<std::size_t>(k1), Matrix::Zero(d.d_u1, d.d_x1));
  }
  return p;
}

Vector local_action(const Prescription& presc, const Vector& x1, int m1, const EstimatorState& est) {
  if (!presc.ztilde.is_empty()) return presc.qbar.at(static_cast<std::size_t>(presc.ztilde.mode()));
  const auto m = static_cast<std::size_t>(m1);
  return presc.qbar.at(m) + presc.ktilde.at(m) * (x1 - est.x_hat1);
}

EstimatorState estimator_update(const ProblemSpec& spec, const EstimatorState& est, const Vector& x0, int m0,
                                ZTilde ztilde_t, const Prescription& presc, const std::optional<Vector>& z_next) {
  if (z_next) return {*z_next};
  if (!ztilde_t.is_empty()) {
    const int m1 = ztilde_t.mode();
    return {local_rows(spec, m0, m1, x0, est.x_hat1, presc.u0, presc.qbar.at(static_cast<std::size_t>(m1)))};
  }
  Vector next = Vector::Zero(spec.dims.d_x1);
  for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
    next += spec.pi1(m1) *
            local_rows(spec, m0, m1, x0, est.x_hat1, presc.u0, presc.qbar.at(static_cast<std::size_t>(m1)));
  }
  return {next};
}

CentralizedTables centralized_solve(const ProblemSpec& spec) {
  const Dims& d = spec.dims;
  const int T = spec.horizon();
  const int k0 = spec.kappa0();
  const int k1 = spec.kappa1();

  CentralizedTables out;
  out.P.assign(static_cast<std::size_t>(T + 2), PairTable<Matrix>(k0, k1, Matrix::Zero(d.dx(), d.dx())));
  out.K.assign(static_cast<std::size_t>(T + 1), PairTable<Matrix>(k0, k1));

  for (int t = T; t >= 0; --t) {
    const auto tn = static_cast<std::size_t>(t);
    Matrix Pbar = Matrix::Zero(d.dx(), d.dx());
    for (int m0 = 0; m0 < k0; ++m0) {
      for (int m1 = 0; m1 < k1; ++m1) Pbar += spec.pi0(m0) * spec.pi1(m1) * out.P[tn + 1].at(m0, m1);
    }
    for (int m0 = 0; m0 < k0; ++m0) {
      for (int m1 = 0; m1 < k1; ++m1) {
        const AssembledSystem sys = assemble_system(spec, m0, m1);
        const Matrix& Q = spec.Q(t, m0, m1);
        const Matrix& R = spec.R(t, m0, m1);
        const Matrix Hxx = Q + sys.A.transpose() * Pbar * sys.A;
        const Matrix Hux = sys.B.transpose() * Pbar * sys.A;
        const Matrix Huu = R + sys.B.transpose() * Pbar * sys.B;
        Eigen::LDLT<Matrix> ldlt(0.5 * (Huu + Huu.transpose()));
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
          throw SingularBlockError("centralized_solve: control block not positive definite at t=" +
                                   std::to_string(t));
        }
        Matrix K = -ldlt.solve(Hux);
        Matrix P = Hxx + Hux.transpose() * K;
        out.P[tn].at(m0, m1) = 0.5 * (P + P.transpose());
        out.K[tn].at(m0, m1) = std::move(K);
      }
    }
  }
  return out;
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "optimal") return PolicyKind::optimal;
  if (name == "zero") return PolicyKind::zero;
  if (name == "ce" || name == "certainty-equivalent") return PolicyKind::certainty_equivalent;
  if (name == "centralized") return PolicyKind::centralized;
  throw UnsupportedPolicyError("unknown policy '" + std::string(name) + "'");
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::optimal:
      return "optimal";
    case PolicyKind::zero:
      return "zero";
    case PolicyKind::certainty_equivalent:
      return "ce";
    case PolicyKind::centralized:
      return "centralized";
  }
  return "unknown";
}

}  // namespace decswitch

#include "decswitch/control.hpp"

namespace decswitch {

namespace {

struct XiLayout {
  int x0, x1, xhat, dim;
  int n0, n1;
  explicit XiLayout(const Dims& d)
      : x0(0), x1(d.d_x0), xhat(d.d_x0 + d.d_x1), dim(d.d_x0 + 2 * d.d_x1), n0(d.d_x0), n1(d.d_x1) {}
};

// Places a gain acting on (x0, y) into xi coordinates, with y either x1 or
// x_hat.
Matrix embed(const Matrix& gain, const XiLayout& xi, int y_offset) {
  Matrix out = Matrix::Zero(gain.rows(), xi.dim);
  out.middleCols(xi.x0, xi.n0) = gain.leftCols(xi.n0);
  out.middleCols(y_offset, xi.n1) = gain.rightCols(xi.n1);
  return out;
}

Matrix selector(const XiLayout& xi, int offset, int n) {
  Matrix out = Matrix::Zero(n, xi.dim);
  out.middleCols(offset, n).setIdentity();
  return out;
}

}  // namespace

LinearPolicy::LinearPolicy(const ProblemSpec& spec, std::string name)
    : name_(std::move(name)),
      horizon_(spec.horizon()),
      kappa0_(spec.kappa0()),
      kappa1_(spec.kappa1()),
      xi_dim_(spec.dims.d_x0 + 2 * spec.dims.d_x1) {
  const StageLaw zero{Matrix::Zero(spec.dims.d_u0, xi_dim_), Matrix::Zero(spec.dims.d_u1, xi_dim_)};
  laws_.assign(static_cast<std::size_t>((horizon_ + 1) * kappa0_ * kappa1_ * 2), zero);
}

std::size_t LinearPolicy::index(int t, int m0, int m1, int gamma) const {
  if (t < 0 || t > horizon_ || m0 < 0 || m0 >= kappa0_ || m1 < 0 || m1 >= kappa1_ || gamma < 0 || gamma > 1) {
    throw IndexError("LinearPolicy: stage (" + std::to_string(t) + ", " + std::to_string(m0 + 1) + ", " +
                     std::to_string(m1 + 1) + ", " + std::to_string(gamma) + ") out of range");
  }
  return static_cast<std::size_t>(((t * kappa0_ + m0) * kappa1_ + m1) * 2 + gamma);
}

StageLaw& LinearPolicy::law(int t, int m0, int m1, int gamma) { return laws_[index(t, m0, m1, gamma)]; }
const StageLaw& LinearPolicy::law(int t, int m0, int m1, int gamma) const {
  return laws_[index(t, m0, m1, gamma)];
}

Actions LinearPolicy::act(int t, int m0, int m1, int gamma, const Vector& x0, const Vector& x1,
                          const Vector& xhat) const {
  Vector xi(xi_dim_);
  xi << x0, x1, xhat;
  const StageLaw& l = law(t, m0, m1, gamma);
  return {l.u0 * xi, l.u1 * xi};
}

void LinearPolicy::check(const ProblemSpec& spec) const {
  if (horizon_ != spec.horizon() || kappa0_ != spec.kappa0() || kappa1_ != spec.kappa1() ||
      xi_dim_ != spec.dims.d_x0 + 2 * spec.dims.d_x1) {
    throw UnsupportedPolicyError("policy '" + name_ + "' does not match the problem's horizon, modes or dims");
  }
  for (const StageLaw& l : laws_) {
    if (l.u0.rows() != spec.dims.d_u0 || l.u0.cols() != xi_dim_ || l.u1.rows() != spec.dims.d_u1 ||
        l.u1.cols() != xi_dim_) {
      throw UnsupportedPolicyError("policy '" + name_ + "' has a stage law of the wrong shape");
    }
  }
}

LinearPolicy LinearPolicy::from_gains(const ProblemSpec& spec, const GainTables& gains, std::string name) {
  const Dims& d = spec.dims;
  const XiLayout xi(d);
  LinearPolicy policy(spec, std::move(name));
  for (int t = 0; t <= spec.horizon(); ++t) {
    const auto tn = static_cast<std::size_t>(t);
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      const Matrix& Kempty = gains.K[tn].at(m0, ZTilde::empty());
      const Matrix u0_lost = embed(Kempty.topRows(d.d_u0), xi, xi.xhat);
      for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
        // Packet lost: (u0, qbar) from (x0, x_hat), innovation on x1 - x_hat.
        const Matrix& Kt = gains.Ktilde[tn].at(m0, m1);
        StageLaw& lost = policy.law(t, m0, m1, 0);
        lost.u0 = u0_lost;
        lost.u1 = embed(Kempty.middleRows(d.d_u0 + m1 * d.d_u1, d.d_u1), xi, xi.xhat);
        lost.u1.middleCols(xi.x1, xi.n1) += Kt;
        lost.u1.middleCols(xi.xhat, xi.n1) -= Kt;

        // Delivered: the estimate equals x1, the law acts on (x0, x1).
        const Matrix& Kl = gains.K[tn].at(m0, ZTilde::local(m1));
        StageLaw& got = policy.law(t, m0, m1, 1);
        got.u0 = embed(Kl.topRows(d.d_u0), xi, xi.x1);
        got.u1 = embed(Kl.bottomRows(d.d_u1), xi, xi.x1);
      }
    }
  }
  return policy;
}

LinearPolicy LinearPolicy::zero(const ProblemSpec& spec) { return LinearPolicy(spec, "zero"); }

LinearPolicy LinearPolicy::centralized(const ProblemSpec& spec, const CentralizedTables& tables) {
  const Dims& d = spec.dims;
  const XiLayout xi(d);
  LinearPolicy policy(spec, "centralized");
  for (int t = 0; t <= spec.horizon(); ++t) {
    for (int m0 = 0; m0 < spec.kappa0(); ++m0) {
      for (int m1 = 0; m1 < spec.kappa1(); ++m1) {
        const Matrix& K = tables.K[static_cast<std::size_t>(t)].at(m0, m1);
        for (int gamma = 0; gamma < 2; ++gamma) {
          StageLaw& l = policy.law(t, m0, m1, gamma);
          l.u0 = embed(K.topRows(d.d_u0), xi, xi.x1);
          l.u1 = embed(K.bottomRows(d.d_u1), xi, xi.x1);
        }
      }
    }
  }
  return policy;
}

LinearPolicy LinearPolicy::certainty_equivalent(const ProblemSpec& spec, const CentralizedTables& tables) {
  LinearPolicy policy = from_gains(spec, certainty_equivalent_gains(spec, tables), "ce");
  return policy;
}

GainTables certainty_equivalent_gains(const ProblemSpec& spec, const CentralizedTables& tables) {
  const Dims& d = spec.dims;
  const int k0 = spec.kappa0();
  const int k1 = spec.kappa1();
  GainTables gains;
  for (int t = 0; t <= spec.horizon(); ++t) {
    const auto tn = static_cast<std::size_t>(t);
    MatrixTable K(k0, k1);
    PairTable<Matrix> Kt(k0, k1);
    for (int m0 = 0; m0 < k0; ++m0) {
      Matrix Kempty = Matrix::Zero(d.d_u0 + k1 * d.d_u1, d.dx());
      for (int m1 = 0; m1 < k1; ++m1) {
        const Matrix& Kc = tables.K[tn].at(m0, m1);
        Kempty.topRows(d.d_u0) += spec.pi1(m1) * Kc.topRows(d.d_u0);
        Kempty.middleRows(d.d_u0 + m1 * d.d_u1, d.d_u1) = Kc.bottomRows(d.d_u1);
        Kt.at(m0, m1) = Kc.bottomRightCorner(d.d_u1, d.d_x1);
        K.at(m0, ZTilde::local(m1)) = Kc;
      }
      K.at(m0, ZTilde::empty()) = std::move(Kempty);
    }
    gains.K.push_back(std::move(K));
    gains.Ktilde.push_back(std::move(Kt));
  }
  return gains;
}

LinearPolicy make_policy(PolicyKind kind, const ProblemSpec& spec, const SolutionBundle& bundle) {
  switch (kind) {
    case PolicyKind::optimal:
      return LinearPolicy::from_gains(spec, bundle.gains, "optimal");
    case PolicyKind::zero:
      return LinearPolicy::zero(spec);
    case PolicyKind::certainty_equivalent:
      return LinearPolicy::certainty_equivalent(spec, centralized_solve(spec));
    case PolicyKind::centralized:
      return LinearPolicy::centralized(spec, centralized_solve(spec));
  }
  throw UnsupportedPolicyError("unknown policy kind");
}

Actions baseline_action(const LinearPolicy& policy, int t, int m0, int m1, int gamma, const Vector& x0,
                        const Vector& x1, const Vector& xhat) {
  return policy.act(t, m0, m1, gamma, x0, x1, xhat);
}

Matrix prediction_map(const ProblemSpec& spec, const LinearPolicy& policy, int t, int m0, int m1, int gamma) {
  const Dims& d = spec.dims;
  const XiLayout xi(d);
  const SystemBlocks& s = spec.system;
  const Matrix E0 = selector(xi, xi.x0, xi.n0);
  const Matrix E1 = selector(xi, xi.x1, xi.n1);
  const Matrix Eh = selector(xi, xi.xhat, xi.n1);

  if (gamma) {
    const StageLaw& l = policy.law(t, m0, m1, 1);
    return s.A10.at(m0, m1) * E0 + s.A11.at(m0, m1) * E1 + s.B10.at(m0, m1) * l.u0 + s.B11.at(m0, m1) * l.u1;
  }

  // Conditional mean: replace x1 by its estimate in every action and average
  // the local rows over the unknown local mode.
  Matrix sub = Matrix::Identity(xi.dim, xi.dim);
  sub.block(xi.x1, xi.x1, xi.n1, xi.n1).setZero();
  sub.block(xi.x1, xi.xhat, xi.n1, xi.n1).setIdentity();
  Matrix out = Matrix::Zero(d.d_x1, xi.dim);
  for (int m = 0; m < spec.kappa1(); ++m) {
    const StageLaw& l = policy.law(t, m0, m, 0);
    out += spec.pi1(m) * (s.A10.at(m0, m) * E0 + s.A11.at(m0, m) * Eh + s.B10.at(m0, m) * l.u0 * sub +
                          s.B11.at(m0, m) * l.u1 * sub);
  }
  return out;
}

}  // namespace decswitch

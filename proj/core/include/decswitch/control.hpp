#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decswitch/model.hpp"
#include "decswitch/solver.hpp"

namespace decswitch {

/// Common estimate of the local state, x_hat^1_t = E[X^1_t | common info].
/// Both controllers can compute it, so one copy serves both.
struct EstimatorState {
  Vector x_hat1;
};

/// What the channel delivered at time t plus the local controller's private
/// data. `z` and `ztilde` are present iff gamma == 1.
struct Observation {
  Vector x0;
  int m0 = 0;
  int gamma = 0;
  std::optional<Vector> z;
  ZTilde ztilde = ZTilde::empty();
  Vector x1;
  int m1 = 0;
};

/// Builds a consistent observation from the raw channel bit.
Observation observe(const Vector& x0, int m0, const Vector& x1, int m1, int gamma);

/// Output of the coordinator at time t: the global action, the mode-indexed
/// mean part of the local law and the innovation gains.
struct Prescription {
  ZTilde ztilde = ZTilde::empty();
  int m0 = 0;
  Vector u0;
  std::vector<Vector> qbar;    // one per local mode
  std::vector<Matrix> ktilde;  // one per local mode; zero when ztilde != empty
};

EstimatorState estimator_init(const ProblemSpec& spec, const Observation& obs0);

/// When ztilde is a local mode l, `est` must already hold x^1_t (the estimator
/// copies the delivered state), and only qbar(l) is non-zero.
Prescription compute_prescription(const ProblemSpec& spec, const GainTables& gains, int t, int m0, ZTilde ztilde,
                                  const Vector& x0, const EstimatorState& est);

/// u^1 = qbar(m1) + Ktilde(m0, m1) (x1 - x_hat) when the packet was lost,
/// u^1 = qbar(l) otherwise.
Vector local_action(const Prescription& presc, const Vector& x1, int m1, const EstimatorState& est);

/// Advances the common estimate. `z_next` is the state delivered at t+1, if
/// any. `presc` must be the prescription applied at t.
EstimatorState estimator_update(const ProblemSpec& spec, const EstimatorState& est, const Vector& x0, int m0,
                                ZTilde ztilde_t, const Prescription& presc, const std::optional<Vector>& z_next);

/// Full-information switched LQR, written independently of the solver so it
/// can cross-check it.
struct CentralizedTables {
  std::vector<PairTable<Matrix>> P;  // t = 0..T+1, d_x x d_x
  std::vector<PairTable<Matrix>> K;  // t = 0..T, d_u x d_x
};

CentralizedTables centralized_solve(const ProblemSpec& spec);

enum class PolicyKind { optimal, zero, certainty_equivalent, centralized };

PolicyKind parse_policy_kind(std::string_view name);
std::string to_string(PolicyKind kind);

/// Actions of a policy that is linear in xi = (x0, x1, x_hat1) for every
/// (t, m0, m1, gamma).
struct StageLaw {
  Matrix u0;  // d_u0 x dim(xi)
  Matrix u1;  // d_u1 x dim(xi)
};

struct Actions {
  Vector u0;
  Vector u1;
};

class LinearPolicy {
 public:
  LinearPolicy(const ProblemSpec& spec, std::string name);

  const std::string& name() const { return name_; }
  int horizon() const { return horizon_; }
  int xi_dim() const { return xi_dim_; }

  StageLaw& law(int t, int m0, int m1, int gamma);
  const StageLaw& law(int t, int m0, int m1, int gamma) const;

  Actions act(int t, int m0, int m1, int gamma, const Vector& x0, const Vector& x1, const Vector& xhat) const;

  /// Optimal-structure policy driven by (possibly perturbed) gain tables.
  static LinearPolicy from_gains(const ProblemSpec& spec, const GainTables& gains, std::string name = "optimal");
  static LinearPolicy zero(const ProblemSpec& spec);
  /// Full-information benchmark: the global controller uses x1 and m1 even when
  /// the packet was lost. Not implementable under the real information pattern.
  static LinearPolicy centralized(const ProblemSpec& spec, const CentralizedTables& tables);
  /// Certainty-equivalent heuristic: centralized gains applied to (x0, x_hat)
  /// at the global controller (mode-averaged when m1 is unknown) and to (x0, x1)
  /// at the local controller.
  static LinearPolicy certainty_equivalent(const ProblemSpec& spec, const CentralizedTables& tables);

  /// Throws UnsupportedPolicyError when a law has the wrong shape.
  void check(const ProblemSpec& spec) const;

 private:
  std::size_t index(int t, int m0, int m1, int gamma) const;

  std::string name_;
  int horizon_;
  int kappa0_;
  int kappa1_;
  int xi_dim_;
  std::vector<StageLaw> laws_;
};

/// Builds the linear policy of the given kind. `bundle` is used for `optimal`.
LinearPolicy make_policy(PolicyKind kind, const ProblemSpec& spec, const SolutionBundle& bundle);

/// Gain tables that make `from_gains` reproduce the certainty-equivalent
/// heuristic.
GainTables certainty_equivalent_gains(const ProblemSpec& spec, const CentralizedTables& tables);

/// Actions of a comparison policy (zero or certainty-equivalent).
Actions baseline_action(const LinearPolicy& policy, int t, int m0, int m1, int gamma, const Vector& x0,
                        const Vector& x1, const Vector& xhat);

/// Linear map xi_t -> E[X^1_{t+1} | common info] before z_{t+1} arrives,
/// for any linear policy. For the optimal policy this coincides with the
/// prescription-based estimator update.
Matrix prediction_map(const ProblemSpec& spec, const LinearPolicy& policy, int t, int m0, int m1, int gamma);

}  // namespace decswitch

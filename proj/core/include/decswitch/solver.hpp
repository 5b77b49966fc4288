#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "decswitch/model.hpp"

namespace decswitch {

/// What the global controller knows about the local mode at time t:
/// nothing (the packet was lost) or the local mode itself.
class ZTilde {
 public:
  static ZTilde empty() { return ZTilde(-1); }
  static ZTilde local(int m1) {
    if (m1 < 0) throw IndexError("ZTilde::local: negative mode index");
    return ZTilde(m1);
  }

  bool is_empty() const { return m1_ < 0; }
  /// 0-based local mode; only meaningful when !is_empty().
  int mode() const { return m1_; }
  /// Position in a (m0, ztilde) table: 0 for empty, m1 + 1 otherwise.
  int slot() const { return m1_ + 1; }

  /// "empty" or "m<k>" with k 1-based.
  std::string key() const { return is_empty() ? "empty" : "m" + std::to_string(m1_ + 1); }

  bool operator==(const ZTilde&) const = default;

 private:
  explicit ZTilde(int m1) : m1_(m1) {}
  int m1_;
};

/// Table indexed by (global mode, ztilde), ztilde ranging over empty and
/// every local mode.
template <typename T>
class ModeTable {
 public:
  ModeTable() = default;
  ModeTable(int kappa0, int kappa1, T init = T{})
      : kappa0_(kappa0), kappa1_(kappa1), data_(static_cast<std::size_t>(kappa0 * (kappa1 + 1)), init) {}

  int kappa0() const { return kappa0_; }
  int kappa1() const { return kappa1_; }

  T& at(int m0, ZTilde z) { return data_[index(m0, z)]; }
  const T& at(int m0, ZTilde z) const { return data_[index(m0, z)]; }

  /// Every ztilde value in table order: empty, m1 = 0, 1, ...
  std::vector<ZTilde> ztildes() const {
    std::vector<ZTilde> out{ZTilde::empty()};
    for (int m1 = 0; m1 < kappa1_; ++m1) out.push_back(ZTilde::local(m1));
    return out;
  }

  bool operator==(const ModeTable& other) const {
    if (kappa0_ != other.kappa0_ || kappa1_ != other.kappa1_) return false;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!matkit::identical(data_[i], other.data_[i])) return false;
    }
    return true;
  }

 private:
  std::size_t index(int m0, ZTilde z) const {
    if (m0 < 0 || m0 >= kappa0_ || z.slot() > kappa1_) {
      throw IndexError("mode table index (" + std::to_string(m0 + 1) + ", " + z.key() + ") out of range");
    }
    return static_cast<std::size_t>(m0 * (kappa1_ + 1) + z.slot());
  }

  int kappa0_ = 0;
  int kappa1_ = 0;
  std::vector<T> data_;
};

using MatrixTable = ModeTable<Matrix>;

/// Pi(G, gamma): expectation of G(M0, Ztilde) given the channel bit.
/// Throws MissingEntryError if a required entry is empty.
Matrix op_pi_gamma(const MatrixTable& G, const ProblemSpec& spec, int gamma);
/// Pi(G) = p0 Pi(G, 0) + p1 Pi(G, 1).
Matrix op_pi(const MatrixTable& G, const ProblemSpec& spec);
/// Psi(G1, G2) = p0 Pi(G1, 0) + p1 Pi(G2, 1).
Matrix op_psi(const MatrixTable& G1, const MatrixTable& G2, const ProblemSpec& spec);

/// Time-invariant dynamics matrices and per-t cost matrices used by the
/// backward recursion.
struct StaticMatrices {
  PairTable<Matrix> D;     // [A B], d_x x (d_x + d_u)
  PairTable<Matrix> D11;   // [A11 B11]
  PairTable<Matrix> Daug;  // D * L_{m1}
  std::vector<Matrix> Dempty;  // per m0: sum_m1 pi(m1) Daug
  std::vector<PairTable<Matrix>> C;       // per t: blockdiag(Q, R)
  std::vector<PairTable<Matrix>> C11;     // per t: blockdiag(Q11, R11)
  std::vector<std::vector<Matrix>> Cempty;  // per t, m0: sum_m1 pi(m1) L' C L
};

StaticMatrices build_static(const ProblemSpec& spec);

/// Value matrices for t = 0..T+1.
struct ValueTables {
  std::vector<MatrixTable> P;       // d_x x d_x
  std::vector<MatrixTable> Ptilde;  // d_x1 x d_x1
  std::vector<double> e;
};

/// Gains for t = 0..T.
struct GainTables {
  std::vector<MatrixTable> K;              // (m0, empty): (d_u0 + kappa1 d_u1) x d_x; (m0, l): d_u x d_x
  std::vector<PairTable<Matrix>> Ktilde;   // d_u1 x d_x1
};

struct SolveMetadata {
  double psd_tolerance = 1e-9;
  double pd_tolerance = matkit::kDefinitenessTol;
  std::string solved_at;  // ISO-8601 UTC
};

struct SolutionBundle {
  ValueTables values;
  GainTables gains;
  double j_star = 0.0;
  SolveMetadata metadata;
};

/// Intermediate matrices of one backward step, exposed for diagnostics and
/// tests.
struct StageMatrices {
  std::vector<Matrix> Eempty;       // per m0
  std::vector<Matrix> Fempty;       // per m0
  MatrixTable H;                    // (m0, ztilde)
  PairTable<Matrix> Htilde;         // (m0, m1)
};

/// One step of the recursion: reads the t+1 value tables, writes P_t,
/// Ptilde_t, K_t, Ktilde_t and e_t. Throws SingularBlockError or
/// DefinitenessError naming (t, m0, ztilde).
StageMatrices backward_step(const ProblemSpec& spec, const StaticMatrices& stat, int t, ValueTables& values,
                            GainTables& gains);

/// Runs the full recursion from T down to 0 and evaluates J*.
SolutionBundle solve_backward(const ProblemSpec& spec);

/// E[V_0] over the initial state, initial modes and initial channel bit.
double analytic_cost(const ProblemSpec& spec, const ValueTables& values);

std::string solution_to_json(const SolutionBundle& bundle, int indent = 2);
/// Reads a bundle written by solution_to_json and checks its shapes against
/// `spec`.
SolutionBundle parse_solution(std::string_view json_text, const ProblemSpec& spec);
SolutionBundle load_solution(const std::filesystem::path& path, const ProblemSpec& spec);

}  // namespace decswitch

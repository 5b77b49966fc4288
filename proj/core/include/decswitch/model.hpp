#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "decswitch/errors.hpp"
#include "decswitch/matkit.hpp"

namespace decswitch {

/// State/action sizes of the global (0) and local (1) plants.
struct Dims {
  int d_x0 = 1;
  int d_x1 = 1;
  int d_u0 = 1;
  int d_u1 = 1;

  int dx() const { return d_x0 + d_x1; }
  int du() const { return d_u0 + d_u1; }

  bool operator==(const Dims&) const = default;
};

/// Mode-set sizes and the i.i.d. mode laws. Modes are 0-based in memory.
struct ModeSpec {
  int kappa0 = 1;
  int kappa1 = 1;
  std::vector<double> pi_m0{1.0};
  std::vector<double> pi_m1{1.0};

  bool operator==(const ModeSpec&) const = default;
};

/// Bernoulli law of the local-to-global link.
struct ChannelSpec {
  double p1 = 1.0;  // probability of a successful transmission

  double p0() const { return 1.0 - p1; }
  double p(int gamma) const { return gamma ? p1 : p0(); }

  bool operator==(const ChannelSpec&) const = default;
};

/// Dense table indexed by (global mode, local mode).
template <typename T>
class PairTable {
 public:
  PairTable() = default;
  PairTable(int kappa0, int kappa1, T init = T{})
      : kappa0_(kappa0), kappa1_(kappa1), data_(static_cast<std::size_t>(kappa0 * kappa1), init) {}

  int kappa0() const { return kappa0_; }
  int kappa1() const { return kappa1_; }

  T& at(int m0, int m1) { return data_[index(m0, m1)]; }
  const T& at(int m0, int m1) const { return data_[index(m0, m1)]; }

  bool operator==(const PairTable& other) const {
    if (kappa0_ != other.kappa0_ || kappa1_ != other.kappa1_) return false;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!matkit::identical(data_[i], other.data_[i])) return false;
    }
    return true;
  }

 private:
  std::size_t index(int m0, int m1) const {
    if (m0 < 0 || m0 >= kappa0_ || m1 < 0 || m1 >= kappa1_) {
      throw IndexError("mode pair (" + std::to_string(m0 + 1) + "," + std::to_string(m1 + 1) +
                       ") out of range");
    }
    return static_cast<std::size_t>(m0 * kappa1_ + m1);
  }

  int kappa0_ = 0;
  int kappa1_ = 0;
  std::vector<T> data_;
};

/// Plant blocks. A00/B00 depend on the global mode only; the zero upper-right
/// blocks of A and B are implied and never stored.
struct SystemBlocks {
  std::vector<Matrix> A00;  // per m0, d_x0 x d_x0
  std::vector<Matrix> B00;  // per m0, d_x0 x d_u0
  PairTable<Matrix> A10;    // d_x1 x d_x0
  PairTable<Matrix> A11;    // d_x1 x d_x1
  PairTable<Matrix> B10;    // d_x1 x d_u0
  PairTable<Matrix> B11;    // d_x1 x d_u1

  bool operator==(const SystemBlocks&) const;
};

/// Stage cost matrices. A single time slice is broadcast to every t.
struct CostSpec {
  bool time_varying = false;
  std::vector<PairTable<Matrix>> Q;  // size 1 or T+1
  std::vector<PairTable<Matrix>> R;

  bool operator==(const CostSpec&) const;
};

enum class NoiseFamily { gaussian, zero };

struct StochasticsSpec {
  int T = 0;                   // decision epochs 0..T
  std::vector<Matrix> covW0;   // size 1 or T+1
  std::vector<Matrix> covW1;
  Vector mu_x0, mu_x1;
  Matrix cov_x0, cov_x1;
  NoiseFamily family = NoiseFamily::gaussian;

  bool operator==(const StochasticsSpec&) const;
};

struct ProblemSpec {
  Dims dims;
  ModeSpec modes;
  ChannelSpec channel;
  SystemBlocks system;
  CostSpec cost;
  StochasticsSpec stoch;

  int horizon() const { return stoch.T; }
  int kappa0() const { return modes.kappa0; }
  int kappa1() const { return modes.kappa1; }
  double pi0(int m0) const { return modes.pi_m0[static_cast<std::size_t>(m0)]; }
  double pi1(int m1) const { return modes.pi_m1[static_cast<std::size_t>(m1)]; }

  const Matrix& Q(int t, int m0, int m1) const;
  const Matrix& R(int t, int m0, int m1) const;

  // Effective second-order statistics: zero when the family is `zero`.
  Matrix noise_cov0(int t) const;
  Matrix noise_cov1(int t) const;
  Matrix init_cov0() const;
  Matrix init_cov1() const;

  bool operator==(const ProblemSpec&) const;
};

/// Full system matrices for one mode pair.
struct AssembledSystem {
  Matrix A;  // d_x x d_x
  Matrix B;  // d_x x d_u
  Matrix D;  // [A B]
};

AssembledSystem assemble_system(const ProblemSpec& spec, int m0, int m1);

/// Checks every invariant and symmetrizes the symmetric fields in place.
/// Throws ShapeError, ProbabilityError or DefinitenessError.
void validate_problem(ProblemSpec& spec);

/// Parses and validates a JSON problem description.
ProblemSpec parse_problem(std::string_view json_text);
ProblemSpec load_problem(const std::filesystem::path& path);

/// Serializes to the same JSON schema `parse_problem` reads.
std::string problem_to_json(const ProblemSpec& spec, int indent = 2);

}  // namespace decswitch

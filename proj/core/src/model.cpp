#include "decswitch/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace decswitch {

namespace {

constexpr double kProbabilityTol = 1e-12;

std::string indexed(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

std::string pair_name(const std::string& field, int m0, int m1) {
  return field + "(" + std::to_string(m0 + 1) + "," + std::to_string(m1 + 1) + ")";
}

void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols, const std::string& field) {
  if (M.rows() != rows || M.cols() != cols) {
    throw ShapeError(field, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                                std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
  }
}

void require_length(const Vector& v, Eigen::Index n, const std::string& field) {
  if (v.size() != n) {
    throw ShapeError(field, "expected length " + std::to_string(n) + ", got " + std::to_string(v.size()));
  }
}

void require_finite(const Matrix& M, const std::string& field) {
  if (!M.allFinite()) throw ShapeError(field, "contains non-finite entries");
}

// Checks symmetry to 1e-10, then symmetrizes and tests definiteness.
void check_symmetric_in_place(Matrix& M, const std::string& field) {
  if (M.size() > 0 && matkit::asymmetry(M) > matkit::kSymmetryTol) {
    throw DefinitenessError(field + " is not symmetric", std::nan(""));
  }
  M = matkit::symmetrize(M);
}

void check_psd_field(Matrix& M, const std::string& field) {
  check_symmetric_in_place(M, field);
  const double lo = matkit::min_eigenvalue(M);
  if (lo < -matkit::kDefinitenessTol * matkit::definiteness_scale(M)) {
    throw DefinitenessError(field + " is not positive semi-definite", lo);
  }
}

void check_pd_field(Matrix& M, const std::string& field) {
  check_symmetric_in_place(M, field);
  const double lo = matkit::min_eigenvalue(M);
  if (!(lo > matkit::kDefinitenessTol * matkit::definiteness_scale(M))) {
    throw DefinitenessError(field + " is not positive definite", lo);
  }
}

void check_distribution(const std::vector<double>& pi, int kappa, const std::string& field) {
  if (static_cast<int>(pi.size()) != kappa) {
    throw ShapeError(field, "expected " + std::to_string(kappa) + " probabilities, got " +
                                std::to_string(pi.size()));
  }
  for (double p : pi) {
    if (!std::isfinite(p) || p < 0.0) throw ProbabilityError(field + " has a negative or non-finite entry");
  }
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  if (std::abs(total - 1.0) > kProbabilityTol) {
    throw ProbabilityError(field + " sums to " + std::to_string(total) + ", expected 1");
  }
}

void check_pair_table(const PairTable<Matrix>& table, const ModeSpec& modes, Eigen::Index rows,
                      Eigen::Index cols, const std::string& field) {
  if (table.kappa0() != modes.kappa0 || table.kappa1() != modes.kappa1) {
    throw ShapeError(field, "expected " + std::to_string(modes.kappa0 * modes.kappa1) + " mode-pair entries");
  }
  for (int m0 = 0; m0 < modes.kappa0; ++m0) {
    for (int m1 = 0; m1 < modes.kappa1; ++m1) {
      require_shape(table.at(m0, m1), rows, cols, pair_name(field, m0, m1));
      require_finite(table.at(m0, m1), pair_name(field, m0, m1));
    }
  }
}

template <typename T>
const T& time_slice(const std::vector<T>& slices, int t) {
  if (slices.empty()) throw MissingEntryError("empty time-indexed field");
  return slices.size() == 1 ? slices.front() : slices.at(static_cast<std::size_t>(t));
}

bool same_matrices(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!matkit::identical(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

bool SystemBlocks::operator==(const SystemBlocks& o) const {
  return same_matrices(A00, o.A00) && same_matrices(B00, o.B00) && A10 == o.A10 && A11 == o.A11 &&
         B10 == o.B10 && B11 == o.B11;
}

bool CostSpec::operator==(const CostSpec& o) const {
  return time_varying == o.time_varying && Q == o.Q && R == o.R;
}

bool StochasticsSpec::operator==(const StochasticsSpec& o) const {
  return T == o.T && same_matrices(covW0, o.covW0) && same_matrices(covW1, o.covW1) &&
         matkit::identical(mu_x0, o.mu_x0) && matkit::identical(mu_x1, o.mu_x1) &&
         matkit::identical(cov_x0, o.cov_x0) && matkit::identical(cov_x1, o.cov_x1) && family == o.family;
}

bool ProblemSpec::operator==(const ProblemSpec& o) const {
  return dims == o.dims && modes == o.modes && channel == o.channel && system == o.system && cost == o.cost &&
         stoch == o.stoch;
}

const Matrix& ProblemSpec::Q(int t, int m0, int m1) const { return time_slice(cost.Q, t).at(m0, m1); }
const Matrix& ProblemSpec::R(int t, int m0, int m1) const { return time_slice(cost.R, t).at(m0, m1); }

Matrix ProblemSpec::noise_cov0(int t) const {
  if (stoch.family == NoiseFamily::zero) return Matrix::Zero(dims.d_x0, dims.d_x0);
  return time_slice(stoch.covW0, t);
}

Matrix ProblemSpec::noise_cov1(int t) const {
  if (stoch.family == NoiseFamily::zero) return Matrix::Zero(dims.d_x1, dims.d_x1);
  return time_slice(stoch.covW1, t);
}

Matrix ProblemSpec::init_cov0() const {
  if (stoch.family == NoiseFamily::zero) return Matrix::Zero(dims.d_x0, dims.d_x0);
  return stoch.cov_x0;
}

Matrix ProblemSpec::init_cov1() const {
  if (stoch.family == NoiseFamily::zero) return Matrix::Zero(dims.d_x1, dims.d_x1);
  return stoch.cov_x1;
}

AssembledSystem assemble_system(const ProblemSpec& spec, int m0, int m1) {
  const Dims& d = spec.dims;
  const SystemBlocks& s = spec.system;
  if (m0 < 0 || m0 >= spec.kappa0() || m1 < 0 || m1 >= spec.kappa1()) {
    throw IndexError("mode pair (" + std::to_string(m0 + 1) + "," + std::to_string(m1 + 1) + ") out of range");
  }
  AssembledSystem out;
  out.A = Matrix::Zero(d.dx(), d.dx());
  out.A.topLeftCorner(d.d_x0, d.d_x0) = s.A00.at(static_cast<std::size_t>(m0));
  out.A.bottomLeftCorner(d.d_x1, d.d_x0) = s.A10.at(m0, m1);
  out.A.bottomRightCorner(d.d_x1, d.d_x1) = s.A11.at(m0, m1);

  out.B = Matrix::Zero(d.dx(), d.du());
  out.B.topLeftCorner(d.d_x0, d.d_u0) = s.B00.at(static_cast<std::size_t>(m0));
  out.B.bottomLeftCorner(d.d_x1, d.d_u0) = s.B10.at(m0, m1);
  out.B.bottomRightCorner(d.d_x1, d.d_u1) = s.B11.at(m0, m1);

  out.D.resize(d.dx(), d.dx() + d.du());
  out.D << out.A, out.B;
  return out;
}

void validate_problem(ProblemSpec& spec) {
  const Dims& d = spec.dims;
  if (d.d_x0 < 1) throw ShapeError("dims.d_x0", "must be >= 1");
  if (d.d_x1 < 1) throw ShapeError("dims.d_x1", "must be >= 1");
  if (d.d_u0 < 1) throw ShapeError("dims.d_u0", "must be >= 1");
  if (d.d_u1 < 1) throw ShapeError("dims.d_u1", "must be >= 1");

  ModeSpec& modes = spec.modes;
  if (modes.kappa0 < 1) throw ShapeError("modes.kappa0", "must be >= 1");
  if (modes.kappa1 < 1) throw ShapeError("modes.kappa1", "must be >= 1");
  check_distribution(modes.pi_m0, modes.kappa0, "modes.pi_m0");
  check_distribution(modes.pi_m1, modes.kappa1, "modes.pi_m1");

  if (!(spec.channel.p1 >= 0.0 && spec.channel.p1 <= 1.0)) {
    throw ProbabilityError("channel.p1 must lie in [0, 1]");
  }

  const SystemBlocks& s = spec.system;
  if (static_cast<int>(s.A00.size()) != modes.kappa0) {
    throw ShapeError("system.A00", "expected one matrix per global mode");
  }
  if (static_cast<int>(s.B00.size()) != modes.kappa0) {
    throw ShapeError("system.B00", "expected one matrix per global mode");
  }
  for (std::size_t i = 0; i < s.A00.size(); ++i) {
    require_shape(s.A00[i], d.d_x0, d.d_x0, indexed("system.A00", i));
    require_finite(s.A00[i], indexed("system.A00", i));
    require_shape(s.B00[i], d.d_x0, d.d_u0, indexed("system.B00", i));
    require_finite(s.B00[i], indexed("system.B00", i));
  }
  check_pair_table(s.A10, modes, d.d_x1, d.d_x0, "system.A10");
  check_pair_table(s.A11, modes, d.d_x1, d.d_x1, "system.A11");
  check_pair_table(s.B10, modes, d.d_x1, d.d_u0, "system.B10");
  check_pair_table(s.B11, modes, d.d_x1, d.d_u1, "system.B11");

  StochasticsSpec& st = spec.stoch;
  if (st.T < 0) throw ShapeError("stoch.T", "must be >= 0");
  const std::size_t slices = static_cast<std::size_t>(st.T) + 1;

  CostSpec& c = spec.cost;
  for (auto* field : {&c.Q, &c.R}) {
    const std::string name = field == &c.Q ? "cost.Q" : "cost.R";
    if (field->empty() || (field->size() != 1 && field->size() != slices)) {
      throw ShapeError(name, "expected 1 or T+1 = " + std::to_string(slices) + " time slices, got " +
                                 std::to_string(field->size()));
    }
    const Eigen::Index n = field == &c.Q ? d.dx() : d.du();
    for (std::size_t t = 0; t < field->size(); ++t) {
      PairTable<Matrix>& table = (*field)[t];
      const std::string tname = indexed(name, t);
      check_pair_table(table, modes, n, n, tname);
      for (int m0 = 0; m0 < modes.kappa0; ++m0) {
        for (int m1 = 0; m1 < modes.kappa1; ++m1) {
          if (field == &c.Q) {
            check_psd_field(table.at(m0, m1), pair_name(tname, m0, m1));
          } else {
            check_pd_field(table.at(m0, m1), pair_name(tname, m0, m1));
          }
        }
      }
    }
  }
  if (c.Q.size() == 1 && c.R.size() == 1) c.time_varying = false;

  for (auto* field : {&st.covW0, &st.covW1}) {
    const bool first = field == &st.covW0;
    const std::string name = first ? "stoch.covW0" : "stoch.covW1";
    const Eigen::Index n = first ? d.d_x0 : d.d_x1;
    if (field->empty() || (field->size() != 1 && field->size() != slices)) {
      throw ShapeError(name, "expected 1 or T+1 = " + std::to_string(slices) + " time slices, got " +
                                 std::to_string(field->size()));
    }
    for (std::size_t t = 0; t < field->size(); ++t) {
      require_shape((*field)[t], n, n, indexed(name, t));
      require_finite((*field)[t], indexed(name, t));
      check_psd_field((*field)[t], indexed(name, t));
    }
  }

  require_length(st.mu_x0, d.d_x0, "stoch.init.mu_x0");
  require_length(st.mu_x1, d.d_x1, "stoch.init.mu_x1");
  if (!st.mu_x0.allFinite()) throw ShapeError("stoch.init.mu_x0", "contains non-finite entries");
  if (!st.mu_x1.allFinite()) throw ShapeError("stoch.init.mu_x1", "contains non-finite entries");
  require_shape(st.cov_x0, d.d_x0, d.d_x0, "stoch.init.cov_x0");
  require_shape(st.cov_x1, d.d_x1, d.d_x1, "stoch.init.cov_x1");
  require_finite(st.cov_x0, "stoch.init.cov_x0");
  require_finite(st.cov_x1, "stoch.init.cov_x1");
  check_psd_field(st.cov_x0, "stoch.init.cov_x0");
  check_psd_field(st.cov_x1, "stoch.init.cov_x1");
}

}  // namespace decswitch

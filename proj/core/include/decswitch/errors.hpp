#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace decswitch {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration errors: raised while loading or validating a problem.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Dimension mismatch in a problem file; names the offending field.
class ShapeError : public ConfigError {
 public:
  ShapeError(std::string field, const std::string& what);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ProbabilityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class MissingEntryError : public Error {
 public:
  using Error::Error;
};

// Numerical errors: raised by the solver, simulator and oracle.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A symmetric matrix failed a PSD/PD test. Carries the minimum eigenvalue.
class DefinitenessError : public NumericError {
 public:
  DefinitenessError(const std::string& what, double min_eigenvalue);
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// The trailing block of a Schur complement is not numerically PD.
class SingularBlockError : public NumericError {
 public:
  explicit SingularBlockError(const std::string& what, double min_eigenvalue = 0.0);
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class NonFiniteError : public NumericError {
 public:
  NonFiniteError(int t, std::uint64_t run_index);
  int time() const noexcept { return t_; }
  std::uint64_t run_index() const noexcept { return run_index_; }

 private:
  int t_;
  std::uint64_t run_index_;
};

/// Exact enumeration would exceed the sequence budget.
class ScaleGuardError : public Error {
 public:
  ScaleGuardError(double sequence_count, double limit);
  double sequence_count() const noexcept { return count_; }

 private:
  double count_;
};

class UnsupportedPolicyError : public Error {
 public:
  using Error::Error;
};

class OptimalityViolation : public NumericError {
 public:
  OptimalityViolation(const std::string& entry, double gradient);
  const std::string& entry() const noexcept { return entry_; }
  double gradient() const noexcept { return gradient_; }

 private:
  std::string entry_;
  double gradient_;
};

}  // namespace decswitch

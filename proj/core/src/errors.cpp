#include "decswitch/errors.hpp"

#include <sstream>

namespace decswitch {

ShapeError::ShapeError(std::string field, const std::string& what)
    : ConfigError(field + ": " + what), field_(std::move(field)) {}

DefinitenessError::DefinitenessError(const std::string& what, double min_eigenvalue)
    : NumericError(what + " (min eigenvalue " + std::to_string(min_eigenvalue) + ")"),
      min_eigenvalue_(min_eigenvalue) {}

SingularBlockError::SingularBlockError(const std::string& what, double min_eigenvalue)
    : NumericError(what), min_eigenvalue_(min_eigenvalue) {}

NonFiniteError::NonFiniteError(int t, std::uint64_t run_index)
    : NumericError("non-finite state at t=" + std::to_string(t) +
                   " in run " + std::to_string(run_index)),
      t_(t),
      run_index_(run_index) {}

namespace {
std::string guard_message(double count, double limit) {
  std::ostringstream os;
  os.precision(17);
  os << "exact enumeration needs " << count << " sequences (limit " << limit << ")";
  return os.str();
}
}  // namespace

ScaleGuardError::ScaleGuardError(double sequence_count, double limit)
    : Error(guard_message(sequence_count, limit)), count_(sequence_count) {}

OptimalityViolation::OptimalityViolation(const std::string& entry, double gradient)
    : NumericError("stationarity violated at " + entry + " (gradient " +
                   std::to_string(gradient) + ")"),
      entry_(entry),
      gradient_(gradient) {}

}  // namespace decswitch

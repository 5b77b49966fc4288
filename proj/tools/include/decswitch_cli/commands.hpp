#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace decswitch::cli {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kNumeric = 3,
  kScaleGuard = 4,
};

/// Parses argv and runs one subcommand. Output goes to `out`, diagnostics to
/// `err`; the return value is the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests: args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace decswitch::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace reach::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kInputError = 2,
  kUsageError = 3,
};

/// Runs the command line `args` (args[0] is the program name) and returns
/// the process exit code. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reach::cli

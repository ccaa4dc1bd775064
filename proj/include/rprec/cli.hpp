#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rprec::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitValidation = 3,
  kExitNumerical = 4,
  kExitIo = 5,
};

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`, diagnostics to `err`; never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rprec::cli

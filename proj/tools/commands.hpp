#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace marketlab::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kSolver = 3,
  kReplication = 4,
};

/// Runs one CLI invocation in-process. `args` excludes the program name.
/// Data goes to `out` unless --out is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace marketlab::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace meanfield::cli {

/// Exit statuses of `run`.
enum ExitCode : int { kSuccess = 0, kValidationError = 1, kNumericalError = 2 };

/// Entry point behind the `meanfield` executable. `args` excludes argv[0].
/// Subcommands: simulate, loss-dist, variance, flocking, convergence,
/// expansion-error, reproduce.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace meanfield::cli

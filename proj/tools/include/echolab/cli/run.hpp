#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace echolab::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kNumericalFailure = 2 };

/// Runs one subcommand: args[0] is one of predict, sd-sim, ed-sim, fit,
/// analyze. Normal output goes to out, diagnostics to err.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace echolab::cli

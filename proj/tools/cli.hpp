#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mlpgrad::cli {

/// Exit codes shared by all subcommands.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kBadInput = 2 };

/// Runs the command line `mlpgrad <args...>` (args excludes the program
/// name). Results go to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlpgrad::cli

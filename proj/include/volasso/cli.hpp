#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace volasso::cli {

/// Exit codes: 0 success (possibly with warnings), 1 runtime failure,
/// 2 usage or configuration error.
enum ExitCode : int { kSuccess = 0, kRuntimeError = 1, kUsageError = 2 };

/// Runs one subcommand. `args` excludes the program name, e.g.
/// {"simulate", "--seed", "7", "--out", "dir"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace volasso::cli

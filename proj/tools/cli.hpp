#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace liodom {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,     // bad arguments or configuration
  kExitData = 2,      // unreadable or malformed input
  kExitNumeric = 3,   // numerical failure (e.g. no correspondences)
};

/// Runs one subcommand. `args` excludes the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace liodom

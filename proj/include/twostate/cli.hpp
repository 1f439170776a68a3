#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace twostate {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitSuiteFailure = 2,
  kExitIo = 3,
};

/// Runs one subcommand (args exclude the program name). Errors are reported on
/// `err` as a line "error code=<Code> exit=<n>" followed by "detail: <text>"
/// lines.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twostate

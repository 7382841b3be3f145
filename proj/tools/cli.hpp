#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace odbguard::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kNumeric = 4,
};

/// Parses `args` (without the program name) and runs the selected
/// subcommand. Help and usage text go to `out`/`err`; logs go to `err`.
int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace odbguard::cli

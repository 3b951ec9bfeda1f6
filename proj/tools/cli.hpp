#pragma once

#include <iosfwd>

namespace biokey::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitProtocol = 4,
  kExitAssertion = 5,
};

/// Parses argv and runs one subcommand. Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace biokey::cli

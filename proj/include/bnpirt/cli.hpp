#pragma once

#include <iosfwd>

namespace bnpirt {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitData = 3, kExitNumerical = 4 };

/// Entry point of the `bnpirt` tool (subcommands fit, simulate, summarize).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bnpirt

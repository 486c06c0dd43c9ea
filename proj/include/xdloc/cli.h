#pragma once

#include <ostream>

namespace xdloc {

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsageError = 2;

// Entry point behind the `xdloc` binary. Failures are reported on `err` as a
// single line: `error: kind=<name> message=<text>`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xdloc

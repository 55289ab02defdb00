#pragma once

#include <iosfwd>

namespace ose {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitExtractionFailed = 3;

// Entry point of the `ose` tool. Reports go to `out` (or to --out), messages
// to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ose

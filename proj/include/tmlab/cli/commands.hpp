#pragma once

#include <ostream>
#include <string_view>

namespace tmlab::cli {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitOperational = 1;  // unreadable input, invalid config, failed run
inline constexpr int kExitUsage = 2;        // unknown subcommand or flag, missing or conflicting flags

// Parses argv and runs one subcommand. Without --out the primary output
// goes to `out`; with --out DIR every output is written under DIR next to
// a manifest.json. Diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tmlab::cli

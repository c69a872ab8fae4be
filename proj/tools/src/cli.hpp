#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace magidyn::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitSolver = 4;

// Runs the command line (args excludes the program name) and returns the
// process exit code. Nothing is thrown.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Splices `--config FILE` entries into the argument list: every key=value
// line becomes "--key value" unless the key is already given on the command
// line. Comma-separated values expand to repeated values. Throws IoError or
// ParseError.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace magidyn::cli

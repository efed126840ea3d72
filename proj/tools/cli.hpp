#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rapm_cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalFailure = 3 };

/// Runs the command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest decimal that reads back to the same double.
std::string format_double(double value);

/// "a,b,c" or "start:stop:step" (inclusive of stop within rounding).
/// Throws std::invalid_argument on malformed input.
std::vector<double> parse_spots(const std::string& text);

/// Reads a `key = value` file into command-line tokens. Throws
/// std::invalid_argument naming the file and line on unknown keys.
std::vector<std::string> config_to_args(const std::string& path);

}  // namespace rapm_cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cirsim::cli {

// Exit codes of run_command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitValidation = 2;

// Parses `2^-4..2^-9` (inclusive dyadic range), a comma-separated list of
// numbers, or a single number. Entries may use the `2^k` form.
std::vector<double> parse_grid(const std::string& text);

// Parses a decimal number or `2^k`.
double parse_number(const std::string& text);

// Entry point behind the `cirsim` binary. args excludes the program name.
// CSV goes to --out when given, otherwise to `out`; diagnostics go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cirsim::cli

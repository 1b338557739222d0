#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scorefold::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Parses and runs one subcommand (schedule, perturb, train, sample, hirm-ref,
/// eval, report). Returns the process exit code; nothing is thrown.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scorefold::cli

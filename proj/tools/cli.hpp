#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace speedclust::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitPrecondition = 4;

/// Runs one CLI invocation (arguments without the program name) and returns its exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace speedclust::cli

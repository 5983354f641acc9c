#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitUsage = 2;

/// Runs `gk <args...>` (args exclude the program name). Machine output goes
/// to `out` unless --out is given; summaries and diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gk::cli

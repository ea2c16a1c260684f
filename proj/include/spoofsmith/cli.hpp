#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spoofsmith {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `spoofsmith` tool. `args` excludes the program name.
/// Returns 0 on success, 1 on a runtime failure and 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spoofsmith

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace svstest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOperational = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSilentFailures = 3;

/// Runs one command line; `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace svstest::cli

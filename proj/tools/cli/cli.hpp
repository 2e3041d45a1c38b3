#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pseudosurv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitNumerical = 4;
inline constexpr int kExitInternal = 1;

/// Runs one invocation. `args` excludes the program name. Never throws.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace pseudosurv::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace grouprl::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitMonitor = 2;
inline constexpr int kExitVerification = 3;

// Environment variable that roots relative output directories.
inline constexpr const char* kOutputRootEnv = "GROUPRL_OUTPUT_ROOT";

// Entry point shared by main() and the tests. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grouprl::cli

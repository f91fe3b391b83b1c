#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace framelabel::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kRuntime = 3,
  kInputOutput = 4,
};

// Runs one command line (args[0] is the subcommand, not the program name).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace framelabel::cli

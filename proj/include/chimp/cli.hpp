#pragma once

#include <string>
#include <vector>

namespace chimp {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,    // bad input files, invalid measures, I/O
  kExitUsage = 2,    // command-line parse errors
  kExitNumeric = 3,  // non-finite training loss, gradient check above threshold
};

/// Environment variable naming the directory under which run directories are created.
inline constexpr const char* kRunRootEnv = "CHIMP_RUN_ROOT";

const char* version();

int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);  // args exclude the program name

}  // namespace chimp

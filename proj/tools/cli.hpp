#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sbell::cli {

enum ExitCode : int {
  kSuccess = 0,
  kRuntimeFailure = 1,  // e.g. every trial failed, storage failure
  kConfigError = 2,     // bad flags or config, missing credentials
  kInputError = 3,      // corrupt or unreadable input file
};

/// Runs one invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace sbell::cli

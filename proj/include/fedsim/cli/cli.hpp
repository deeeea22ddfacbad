#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fedsim::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kExists = 3,
  kDiverged = 4,
  kEmptyInput = 5,
};

// Entry point behind the `fedsim` executable. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fedsim::cli

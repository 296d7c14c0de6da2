#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace focalkit::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericalError = 3,
};

// Runs one command line (without the program name). Results go to `out`,
// logs to stderr.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace focalkit::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wickmps::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kGeneration = 2,
  kDegenerate = 3,
  kInfiniteP = 4,
  kZeroCoefficient = 5,
  kVerifyFailed = 6,
  kUsage = 64,
};

/// Runs one command line (without the program name). Nothing is written
/// outside `out`, `err` and the files named by --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wickmps::cli

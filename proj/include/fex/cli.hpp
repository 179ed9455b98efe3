#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fex {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitInvariant = 2,
  kExitIo = 3,
};

/// Entry point behind the `fex` executable. argv[0] is the program name.
///   simulate <config> [--out DIR]
///   stability <config>
///   sweep <sweepspec> [--out DIR]
///   verify-lemmas [--samples N] [--count N] [--seed S]
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace fex

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pmltm::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kNumerical = 3,
    kIo = 4,
    kMismatch = 5,  ///< `rerun --verify` found differing outputs
};

/// Runs one command line (without the program name) and returns the exit
/// code. Everything the command prints goes to `out` and `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pmltm::cli

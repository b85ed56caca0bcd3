#pragma once

#include <ostream>

namespace aloha::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kInfeasible = 3,
    kNonConvergence = 4,
};

/// Entry point of the aloha-game tool. Output goes to `out` unless --out is
/// given; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aloha::cli

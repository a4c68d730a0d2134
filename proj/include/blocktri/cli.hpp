#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "blocktri/core.hpp"

namespace blocktri::cli {

/// Exit codes of the `blocktri` tool.
enum ExitCode : int {
    kOk = 0,
    kSolverError = 1,
    kUsageError = 2,
};

/// Named (N, n) sweeps accepted by `bench --sweep`.
std::vector<std::pair<Index, Index>> sweep_shapes(const std::string& name);

/// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace blocktri::cli

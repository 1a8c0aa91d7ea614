#pragma once

#include <iosfwd>

namespace deepcars {

enum ExitCode : int { kExitOk = 0, kExitRuntimeError = 1, kExitUsageError = 2 };

// Subcommands: train-tabular, train-dqn, evaluate, demo, plot.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace deepcars

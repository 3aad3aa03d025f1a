#pragma once

namespace refiner::cli {

/// Parses arguments, runs the chosen subcommand and returns the process exit code:
/// 0 success, 1 runtime failure, 2 invalid input or flags.
int run(int argc, const char* const* argv);

}  // namespace refiner::cli

#pragma once

namespace spikegam::cli {

// Exit codes of the command-line tool.
enum ExitCode : int {
    kSuccess = 0,
    kInputError = 2,
    kNumericalFailure = 3,
    kNotConverged = 4,
};

// Runs the spikegam command line (subcommands fit, generate, simulate and
// benchmark) and returns its exit code. Errors are reported on stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace spikegam::cli

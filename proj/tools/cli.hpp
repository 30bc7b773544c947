#pragma once

#include <string>
#include <vector>

namespace stopflow {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitValidation = 2,
    kExitNumerical = 3,
    kExitIo = 4,
};

/// Runs the `stopflow` command line; args[0] is the program name.
/// Errors are reported on stderr and mapped to an ExitCode.
int run_cli(const std::vector<std::string>& args);

}  // namespace stopflow

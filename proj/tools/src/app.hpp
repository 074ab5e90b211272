#pragma once

namespace lipreach::cli {

/// Parses and executes one command line. Returns the process exit code:
/// 0 converged / verified nonnegative, 2 counterexample found, 3 node cap
/// reached, 1 failed benchmark assertions, 64 usage or input errors.
int run(int argc, char** argv);

}  // namespace lipreach::cli

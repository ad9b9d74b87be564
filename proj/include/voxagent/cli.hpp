#pragma once

#include <atomic>
#include <iosfwd>

#include "voxagent/error.hpp"

namespace voxagent::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,  // replay FAIL, unverifiable trace
  kExitUsage = 2,         // bad flags or arguments
  kExitInput = 3,         // missing/invalid input files, empty inputs
  kExitInfra = 4,         // bridge or endpoint unreachable, I/O failure
  kExitInterrupted = 130  // ctrl-C; open traces were finalized
};

ExitCode exit_code_for(Errc code);

/// Entry point shared by the binary and the tests. `cancel` is polled by
/// long-running commands (serve, run).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* cancel = nullptr);

}  // namespace voxagent::cli

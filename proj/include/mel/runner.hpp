#pragma once

#include <string>

#include "mel/config.hpp"

namespace mel {

// Exit codes: 0 all checks pass, 1 check failure, 2 configuration error,
// 3 solver failure.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailure = 1,
  kExitConfigError = 2,
  kExitSolverFailure = 3,
};

// Executes the configured pipeline, writing <out>/<subcommand>.csv and
// <out>/summary.json. Returns the exit code.
int run(const RunConfig& cfg);

}  // namespace mel

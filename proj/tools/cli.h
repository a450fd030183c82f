// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BIMATH_TOOLS_CLI_H_
#define BIMATH_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace bimath {

enum ExitCode {
  kExitOk = 0,
  kExitUsage = 1,
  kExitRuntime = 2,
  kExitValidation = 3,
};

// Entry point behind the `bimath` binary. args excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace bimath

#endif  // BIMATH_TOOLS_CLI_H_

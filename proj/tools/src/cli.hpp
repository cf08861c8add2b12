#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spanqa::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalidCorpus = 1,
  kExitValidation = 2,
  kExitTolerance = 3,
  kExitIo = 4,
  kExitRuntime = 5,
};

// Runs one command; args[0] is the program name. Reports go to `out`,
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spanqa::cli

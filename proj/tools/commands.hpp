#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace perfcost::cli {

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kUsageError = 2 };

// Runs the command line `args` (args[0] is the program name). Normal output
// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace perfcost::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace uplift::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

// Runs one command line (args[0] is the program name). Diagnostics go to
// `err`; file artifacts are written where the flags say.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uplift::cli

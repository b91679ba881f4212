#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace memento::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kIoError = 3, kCheckFailed = 4 };

/// Runs the command line `args` (without the program name). JSON lines go to
/// `out` unless --out redirects them; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memento::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace impforecast {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitInternal = 3,
};

/// Runs one command line (without the program name). Results go to files or
/// `out`; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace impforecast

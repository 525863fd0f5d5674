#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fixq::cli {

/// Runs the command line `args` (without the program name) and returns the
/// process exit code. Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fixq::cli

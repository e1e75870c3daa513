#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ecgfwd {

/// Runs one CLI invocation. args excludes the program name. Returns the
/// process exit status; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ecgfwd

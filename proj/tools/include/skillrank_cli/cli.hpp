#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace skillrank::cli {

// Runs one command line (args excludes the program name). Returns the process
// exit code: 0 on success, 1 on a pipeline error, 2 on a usage error. Errors
// are written to err as {"error": {"code", "message"}}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace skillrank::cli

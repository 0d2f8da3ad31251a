#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace phishagent::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kTransport = 3 };

/// Parses and runs one subcommand. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace phishagent::cli

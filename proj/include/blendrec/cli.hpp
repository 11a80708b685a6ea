#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blendrec::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 2, kRuntimeError = 3 };

// Entry point of the `blendrec` tool; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace blendrec::cli

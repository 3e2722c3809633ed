#pragma once
// Command-line surface. Kept as a library so tests can drive it in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace bergman::cli {

enum ExitCode : int { kPass = 0, kSuiteFailure = 1, kConfigError = 2 };

/// args excludes the program name, e.g. {"verify", "--suite", "lemma4", ...}.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace bergman::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aeb::cli {

// Exit-code contract shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kFindings = 1,  // validation diagnostics
  kInputError = 2,  // unreadable files, schema violations, bad flags
};

// Runs `aebscore <args...>`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aeb::cli

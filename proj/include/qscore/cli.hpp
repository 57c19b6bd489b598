#pragma once

#include <string>
#include <vector>

namespace qscore::cli {

struct ExecResult {
  int exit_code = 0;   // 0 success, 1 domain error, 2 usage error
  std::string out;     // rendered output (stdout)
  std::string err;     // diagnostics (stderr)
};

// Runs one CLI invocation; argv excludes the program name. Deterministic:
// identical inputs yield byte-identical output.
ExecResult execute(const std::vector<std::string>& argv);

// Forwards to execute() and writes the streams; returns the exit code.
int run_main(int argc, char** argv);

}  // namespace qscore::cli

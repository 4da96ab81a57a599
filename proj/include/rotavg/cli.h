#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rotavg {

enum ExitCode {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

// Runs one subcommand (synth, weigh, average, evaluate, report, bench).
// args excludes the program name. Results go to files and out, diagnostics
// to err.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

int RunCli(int argc, const char* const* argv);

}  // namespace rotavg

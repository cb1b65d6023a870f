#ifndef NSE_TOOLS_CLI_HPP
#define NSE_TOOLS_CLI_HPP

#include <ostream>

namespace nse {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitCheckpoint = 4,
};

// Entry point for the `nse` tool. Payloads go to `out`, logs and the
// effective configuration to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nse

#endif  // NSE_TOOLS_CLI_HPP

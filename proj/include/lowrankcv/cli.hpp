#ifndef LOWRANKCV_CLI_HPP
#define LOWRANKCV_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace lowrankcv {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitIo = 1,
    kExitUsage = 2,
};

/**
 * Runs the command-line tool. `args` excludes the program name. Data goes to
 * `out`, diagnostics to `err`; the return value is an ExitCode.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lowrankcv

#endif  // LOWRANKCV_CLI_HPP

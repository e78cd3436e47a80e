#pragma once

#include <ostream>
#include <span>
#include <string>

namespace rgf {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,      // unparseable arguments or config
  kExitValidation = 3,  // config parsed but violates a contract
  kExitRuntime = 4,     // numerical or I/O failure during the run
};

/// Entry point behind the rgf executable. `args` excludes the program name.
/// Results go to `out` as JSON; failures go to `err` as a one-line JSON
/// object {"error": {"kind": ..., "message": ...}} (plus usage text for
/// argument errors).
int cli_run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace rgf

#ifndef ERLMIX_TOOLS_CLI_HPP_
#define ERLMIX_TOOLS_CLI_HPP_

#include <ostream>

namespace erlmix::cli {

/// Entry point of the `erlmix` command.  Success prints a JSON artifact
/// list to `out`; failure prints {"error": {...}} to `out` and returns
/// nonzero.  Progress and log lines go to `err`.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace erlmix::cli

#endif  // ERLMIX_TOOLS_CLI_HPP_

#pragma once

#include <ostream>

namespace dsvgp {

/// Subcommands fit, stream, bo, predict, eval and make-data. Returns 0 on
/// success, 2 on usage or configuration errors, 1 on runtime errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dsvgp

#pragma once

#include <iosfwd>

namespace varsketch::cli {

/// Runs the command line. Returns 0 on success, 1 on usage or validation
/// errors, 2 on runtime errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace varsketch::cli

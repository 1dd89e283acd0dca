#pragma once

#include <iosfwd>

namespace tasksel::cli {

/// Entry point for the `tasksel` command. Returns the process exit status:
/// 0 on success, 1 for data or I/O errors, 2 for usage/configuration errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tasksel::cli

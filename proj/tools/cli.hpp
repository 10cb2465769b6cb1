#pragma once

#include <iosfwd>

namespace jarz::cli {

// Full command line, including argv[0]. Returns the process exit code:
// 0 pass, 1 check failure, 2 config/input error, 3 numerical abort.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jarz::cli

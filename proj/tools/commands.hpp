#pragma once

#include <string>
#include <vector>

namespace hyperlabel::cli {

// Runs the command line (argv[0] included) and returns the process exit code:
// 0 success, 1 config error, 2 data error, 3 numeric failure.
int run(int argc, char** argv);

}  // namespace hyperlabel::cli

#pragma once

#include <string>
#include <vector>

namespace lazygnn {

// Runs the command-line tool on argv[1:] and returns the process exit code:
// 0 success, 1 runtime failure, 2 usage or configuration error.
int run_cli(const std::vector<std::string>& args);

}  // namespace lazygnn

#pragma once

#include <string>
#include <vector>

namespace distill {

/// Full command-line entry point (arguments without the program name).
/// Returns the process exit code: 0 success, 2 config/input error,
/// 3 computation failure, 4 property violation.
int cli_main(const std::vector<std::string>& args);

}  // namespace distill

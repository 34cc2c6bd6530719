#pragma once

#include <string>
#include <vector>

namespace trace {

/// Entry point behind the `trace` binary. args excludes the program name.
/// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
int run_command(const std::vector<std::string>& args);

} // namespace trace

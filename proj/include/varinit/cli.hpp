#pragma once

#include <string>
#include <vector>

namespace varinit {

/// Runs one CLI invocation (argv without the program name). Returns the
/// process exit code: 0 success, 1 usage error, 2 numerical error.
int dispatch(const std::vector<std::string>& args);

}  // namespace varinit

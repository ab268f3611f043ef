#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jm::cli {

// Runs one CLI invocation. Exit codes: 0 the property holds / success,
// 1 the property fails (incompatible, non-unique, ...), 2 invalid input,
// 3 solver failure.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace jm::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace openhealth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2; // bad flags or configuration
inline constexpr int kExitData = 3;  // input data failed validation

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace openhealth::cli

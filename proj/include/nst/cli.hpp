#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nst::cli {

inline constexpr const char* kEngineVersion = "nst 1.0.0";

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run(int argc, char** argv);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nst::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace matvar {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitVerificationFailed = 3;

/// Entry point shared by the `matvar` executable and the tests. `args`
/// excludes the program name, e.g. {"manova", "--input", "data.csv", ...}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace matvar

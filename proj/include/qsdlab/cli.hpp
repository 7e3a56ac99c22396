#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qsd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumerical = 4;

/// Entry point. args excludes the program name. Reports go to files under
/// --out, or to `out` when --out is absent; diagnostics are one line on `err`:
///   error: <Kind>: <message>
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace qsd::cli

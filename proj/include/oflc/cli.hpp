#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace oflc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/// Entry point of the `oflc` tool. args excludes the program name.
///
///   simulate --scenario FILE [--controller NAME] [--out DIR] ...
///   compare  --scenario FILE [--controllers A,B] [--out DIR] ...
///   selftest [--scenario FILE]
///
/// Returns 0 on success, 1 on usage/config/IO errors, 2 on a numerical
/// abort or a failed self-test check.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oflc::cli

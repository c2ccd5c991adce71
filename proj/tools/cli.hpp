#pragma once

// Command-line front end: decompose, verify, predict, oracle, generate.
//
// Exit codes: 0 success, 1 usage or input error, 2 verification failure.

#include <ostream>
#include <string>
#include <vector>

namespace rigidity::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerifyFailed = 2;

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rigidity::cli

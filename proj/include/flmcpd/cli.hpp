#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace flmcpd::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kDataError = 3,
  kNumericalFailure = 4,
};

/// Entry point for `flmcpd <subcommand> ...`. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flmcpd::cli

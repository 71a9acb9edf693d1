#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pots {

inline constexpr unsigned long long kDefaultSeed = 42;

/// Entry point of the `pots` tool. Returns the process exit code:
/// 0 success, 2 configuration error, 3 precondition error, 4 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pots

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coldrec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

std::string synopsis();

// Runs one command. `args` excludes the program name. Results go to `out`,
// diagnostics and the synopsis (on usage errors) to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coldrec::cli

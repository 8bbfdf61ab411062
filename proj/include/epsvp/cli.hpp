#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epsvp::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "EPSVP_OUT_DIR";

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

} // namespace epsvp::cli

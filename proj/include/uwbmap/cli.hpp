#pragma once

#include <string>
#include <vector>

namespace uwbmap::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitConfig = 4;

// args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace uwbmap::cli

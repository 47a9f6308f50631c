#pragma once

#include <iosfwd>

namespace ecsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitValidation = 2;

// Entry point of the ec-attack-sim command; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ecsim

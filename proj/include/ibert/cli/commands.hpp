#pragma once

#include <iosfwd>

namespace ibert::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

// Environment variable naming the directory under which commands place
// their output when --out is not given.
inline constexpr const char* kOutputRootEnv = "IBERT_OUTPUT_ROOT";

// Entry point for `ibert gen|train|eval|ablate|report`. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ibert::cli

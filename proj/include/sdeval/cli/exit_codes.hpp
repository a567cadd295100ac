#pragma once

#include <string>

#include "sdeval/error.hpp"
#include "sdeval/runner/execute.hpp"

namespace sdeval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kErrorCodeBase = 10;
inline constexpr int kExitViolations = 40;

// Each library error code gets its own exit code, 10 upward in enum order.
inline int exit_code_for(ErrorCode c) { return kErrorCodeBase + static_cast<int>(c); }

inline int exit_code_for(runner::RunStatus s) {
  switch (s) {
    case runner::RunStatus::kCompleted: return kExitOk;
    case runner::RunStatus::kTimeout: return 41;
    case runner::RunStatus::kCrashed: return 42;
    case runner::RunStatus::kInvalidOutput: return 43;
    case runner::RunStatus::kQuotaRejected: return 44;
  }
  return kExitInternal;
}

inline std::string exit_code_table() {
  std::string t = "Exit codes:\n  0  success\n  1  internal error\n  2  usage error\n";
  for (int i = 0; i <= static_cast<int>(ErrorCode::kRoundActive); ++i) {
    const auto c = static_cast<ErrorCode>(i);
    t += "  " + std::to_string(exit_code_for(c)) + " " + std::string(to_string(c)) + "\n";
  }
  t += "  40 manifest validation found violations\n";
  t += "  41 run timeout\n  42 run crashed\n  43 run produced invalid output\n  44 run rejected by daily quota\n";
  return t;
}

}  // namespace sdeval::cli

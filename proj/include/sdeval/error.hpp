#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sdeval {

// Every failure the library raises carries one of these codes. The CLI maps
// them onto process exit codes (see exit_code_for()).
enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kFormat,
  // manifest
  kSourceUnderfull,
  kUndecodableFile,
  kInsufficientClips,
  kUnknownOperator,
  // augment / launder
  kSilentInput,
  kPluginMissing,
  kPluginFailed,
  kDecodeFailed,
  kNoiseBankEmpty,
  kUnknownParent,
  // scoring
  kMissingSample,
  kUnknownSample,
  kDuplicateSample,
  kMalformedRow,
  kNonFiniteScore,
  kUndefinedClassRate,
  // runner
  kMissingAudio,
  kSandboxUnavailable,
  // board
  kDuplicateRun,
  kUnauthorized,
  kUnknownTeam,
  kScoresUnavailable,
  kRoundActive,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kSourceUnderfull: return "SourceUnderfull";
    case ErrorCode::kUndecodableFile: return "UndecodableFile";
    case ErrorCode::kInsufficientClips: return "InsufficientClips";
    case ErrorCode::kUnknownOperator: return "UnknownOperator";
    case ErrorCode::kSilentInput: return "SilentInput";
    case ErrorCode::kPluginMissing: return "PluginMissing";
    case ErrorCode::kPluginFailed: return "PluginFailed";
    case ErrorCode::kDecodeFailed: return "DecodeFailed";
    case ErrorCode::kNoiseBankEmpty: return "NoiseBankEmpty";
    case ErrorCode::kUnknownParent: return "UnknownParent";
    case ErrorCode::kMissingSample: return "MissingSample";
    case ErrorCode::kUnknownSample: return "UnknownSample";
    case ErrorCode::kDuplicateSample: return "DuplicateSample";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kNonFiniteScore: return "NonFiniteScore";
    case ErrorCode::kUndefinedClassRate: return "UndefinedClassRate";
    case ErrorCode::kMissingAudio: return "MissingAudio";
    case ErrorCode::kSandboxUnavailable: return "SandboxUnavailable";
    case ErrorCode::kDuplicateRun: return "DuplicateRun";
    case ErrorCode::kUnauthorized: return "Unauthorized";
    case ErrorCode::kUnknownTeam: return "UnknownTeam";
    case ErrorCode::kScoresUnavailable: return "ScoresUnavailable";
    case ErrorCode::kRoundActive: return "RoundActive";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> ids = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        ids_(std::move(ids)) {}

  ErrorCode code() const noexcept { return code_; }
  // Offending identifiers (sample ids, source ids, paths), when the error is
  // about a specific set of them.
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  ErrorCode code_;
  std::vector<std::string> ids_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::vector<std::string> ids = {}) {
  throw Error(code, message, std::move(ids));
}

}  // namespace sdeval

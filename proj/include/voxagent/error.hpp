#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace voxagent {

/// Failure classes raised across the library. Each maps onto one error
/// named in the module contracts; the bridge folds them into wire codes.
enum class Errc {
  MissingFile,
  ChecksumMismatch,
  SchemaViolation,
  OutOfBounds,
  UnknownSeries,
  UnknownStudy,
  UnknownTool,
  UnknownTask,
  BadArgs,
  BadSession,
  TrackForbidden,
  BudgetExceeded,
  SeedOutOfBounds,
  SeedOutsideThreshold,
  EmptyMask,
  EmptyInput,
  MixedModules,
  Sealed,
  ChainBroken,
  Malformed,
  StudyUnavailable,
  BridgeUnreachable,
  EndpointError,
  ParseFailure,
  JudgeUnavailable,
  AgentFault,
  Io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, nlohmann::json detail = nullptr)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message),
        detail_(std::move(detail)) {}

  Errc code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  /// Structured diagnostics (e.g. per-field argument errors); null when absent.
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string message_;
  nlohmann::json detail_;
};

}  // namespace voxagent

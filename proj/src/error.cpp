#include "voxagent/error.hpp"

namespace voxagent {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::UnknownSeries: return "UnknownSeries";
    case Errc::UnknownStudy: return "UnknownStudy";
    case Errc::UnknownTool: return "UnknownTool";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::BadArgs: return "BadArgs";
    case Errc::BadSession: return "BadSession";
    case Errc::TrackForbidden: return "TrackForbidden";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::SeedOutOfBounds: return "SeedOutOfBounds";
    case Errc::SeedOutsideThreshold: return "SeedOutsideThreshold";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MixedModules: return "MixedModules";
    case Errc::Sealed: return "Sealed";
    case Errc::ChainBroken: return "ChainBroken";
    case Errc::Malformed: return "Malformed";
    case Errc::StudyUnavailable: return "StudyUnavailable";
    case Errc::BridgeUnreachable: return "BridgeUnreachable";
    case Errc::EndpointError: return "EndpointError";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::JudgeUnavailable: return "JudgeUnavailable";
    case Errc::AgentFault: return "AgentFault";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace voxagent

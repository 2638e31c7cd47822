#include "meetflow/error.hpp"

namespace meetflow {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::FixtureMissing: return "FixtureMissing";
    case ErrorCode::StructuredOutputExhausted: return "StructuredOutputExhausted";
    case ErrorCode::PlanInvalid: return "PlanInvalid";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::ToolInvalid: return "ToolInvalid";
    case ErrorCode::IncompleteSelection: return "IncompleteSelection";
    case ErrorCode::UnknownParticipant: return "UnknownParticipant";
    case ErrorCode::InsufficientResponses: return "InsufficientResponses";
    case ErrorCode::CountOutOfRange: return "CountOutOfRange";
    case ErrorCode::LayoutInvalid: return "LayoutInvalid";
    case ErrorCode::ScriptExhausted: return "ScriptExhausted";
    case ErrorCode::ProposalAlreadyOpen: return "ProposalAlreadyOpen";
    case ErrorCode::ProposalNotOpen: return "ProposalNotOpen";
    case ErrorCode::DeadlinePassed: return "DeadlinePassed";
    case ErrorCode::GapDetected: return "GapDetected";
    case ErrorCode::UnknownEventKind: return "UnknownEventKind";
    case ErrorCode::PermissionDenied: return "PermissionDenied";
    case ErrorCode::LifecycleViolation: return "LifecycleViolation";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::optional<ErrorCode> parse_error_code(std::string_view s) noexcept {
  for (int i = 0; i <= static_cast<int>(ErrorCode::ConfigError); ++i) {
    if (to_string(static_cast<ErrorCode>(i)) == s) return static_cast<ErrorCode>(i);
  }
  return std::nullopt;
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::PreconditionViolation:
    case ErrorCode::IncompleteSelection:
    case ErrorCode::UnknownParticipant:
    case ErrorCode::InsufficientResponses:
    case ErrorCode::CountOutOfRange:
    case ErrorCode::PermissionDenied:
    case ErrorCode::LifecycleViolation:
    case ErrorCode::ProtocolError:
    case ErrorCode::UnknownSession:
    case ErrorCode::ConfigError:
    case ErrorCode::ScriptExhausted:
    case ErrorCode::GapDetected:
    case ErrorCode::UnknownEventKind:
      return 1;
    case ErrorCode::ParseFailure:
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::FixtureMissing:
    case ErrorCode::StructuredOutputExhausted:
    case ErrorCode::PlanInvalid:
    case ErrorCode::ToolInvalid:
    case ErrorCode::LayoutInvalid:
      return 2;
    default:
      return 3;
  }
}

namespace {

std::string join_reasons(const std::vector<std::string>& reasons) {
  std::string out = "structured output exhausted after " + std::to_string(reasons.size()) + " attempt(s)";
  for (std::size_t i = 0; i < reasons.size(); ++i) {
    out += "; attempt " + std::to_string(i + 1) + ": " + reasons[i];
  }
  return out;
}

}  // namespace

StructuredOutputExhausted::StructuredOutputExhausted(std::vector<std::string> reasons, bool last_semantic)
    : Error(ErrorCode::StructuredOutputExhausted, join_reasons(reasons)),
      reasons_(std::move(reasons)),
      last_semantic_(last_semantic) {}

}  // namespace meetflow

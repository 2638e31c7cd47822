#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace meetflow {

enum class ErrorCode {
  InvalidArgument,
  ParseFailure,
  ProviderUnavailable,
  FixtureMissing,
  StructuredOutputExhausted,
  PlanInvalid,
  PreconditionViolation,
  ToolInvalid,
  IncompleteSelection,
  UnknownParticipant,
  InsufficientResponses,
  CountOutOfRange,
  LayoutInvalid,
  ScriptExhausted,
  ProposalAlreadyOpen,
  ProposalNotOpen,
  DeadlinePassed,
  GapDetected,
  UnknownEventKind,
  PermissionDenied,
  LifecycleViolation,
  ProtocolError,
  UnknownSession,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Process exit status for a failure of this class: 1 validation, 2 provider, 3 internal.
std::optional<ErrorCode> parse_error_code(std::string_view s) noexcept;
int exit_code_for(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

// Thrown by output parsers. `semantic` distinguishes a well-formed value that
// breaks a content rule (too few features, bad cardinality) from unreadable output.
class ParseFailure : public Error {
public:
  explicit ParseFailure(const std::string& reason, bool semantic = false)
      : Error(ErrorCode::ParseFailure, reason), semantic_(semantic) {}

  bool semantic() const noexcept { return semantic_; }

private:
  bool semantic_;
};

class StructuredOutputExhausted : public Error {
public:
  StructuredOutputExhausted(std::vector<std::string> reasons, bool last_semantic);

  const std::vector<std::string>& reasons() const noexcept { return reasons_; }
  bool last_failure_semantic() const noexcept { return last_semantic_; }

private:
  std::vector<std::string> reasons_;
  bool last_semantic_;
};

}  // namespace meetflow

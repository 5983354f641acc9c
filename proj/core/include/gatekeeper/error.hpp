#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gk {

enum class ErrorCode {
  // frontend
  SyntaxError,
  DuplicateName,
  UnknownKeyword,
  TypeMismatch,
  UnknownIdentifier,
  ArityMismatch,
  IllegalRequiresPlacement,
  DesignError,
  // state
  UnknownMap,
  KeyArityMismatch,
  UnknownField,
  RangeError,
  // evaluation
  UnboundVariable,
  NullDereference,
  OutOfBounds,
  // solving
  Unsat,
  DomainExhausted,
  // engines
  UnknownAction,
  ArgTypeMismatch,
  ServiceUnavailable,
  InitTypeMismatch,
  ModelUnsat,
  PreconditionFailed,
  ConcurrencyError,
  // traces, models, services, scripts
  TraceVersionMismatch,
  CorruptTrace,
  UnknownModel,
  UnknownVariant,
  InvalidPath,
  ScriptParseError,
  ScenarioError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Exception type used across the library. Carries a machine-readable code
/// so callers (CLI, harness) can map failures without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace gk

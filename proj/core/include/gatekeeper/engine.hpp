#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/constraint.hpp"
#include "gatekeeper/error.hpp"
#include "gatekeeper/frontend.hpp"
#include "gatekeeper/state.hpp"
#include "gatekeeper/value.hpp"

namespace gk {

/// One extern call made while executing an action. `args` are the values
/// after the call returned (buffers filled by the service).
struct ExternEvent {
  std::string fn;
  std::vector<Value> args;
  Value ret;
  bool operator==(const ExternEvent&) const = default;
};

struct AssertEvent {
  std::string src;
  bool ok = false;
  bool operator==(const AssertEvent&) const = default;
};

struct Violation {
  std::string constraint;  // the requires text
  Bindings bindings;       // every variable in scope when it failed
  std::string action;
  std::uint64_t seq = 0;
  bool operator==(const Violation&) const = default;
};

struct Verdict {
  enum class Outcome { Ok, Violation, ModelError };

  Outcome outcome = Outcome::Ok;
  std::string action;
  std::uint64_t seq = 0;
  /// Ok: the action's return value.
  Value ret;
  /// Violation: the first failed constraint.
  std::optional<Violation> violation;
  /// Under the RECORD policy, every failed constraint (the first included).
  std::vector<Violation> recorded;
  /// ModelError: the failure code and message.
  ErrorCode error_code = ErrorCode::DesignError;
  std::string error;
  /// Final values of the action parameters (buffers filled by the call).
  Bindings outputs;

  bool ok() const { return outcome == Outcome::Ok; }
  std::string to_string() const;
  bool operator==(const Verdict&) const = default;
};

std::string_view to_string(Verdict::Outcome outcome);

/// Everything one action execution produced, as written to traces.
struct ActionRecord {
  std::uint64_t seq = 0;
  std::string action;
  std::vector<Value> args;
  std::vector<ExternEvent> externs;
  std::vector<AssertEvent> asserts;
  std::vector<StateWrite> delta;
  Verdict verdict;
};

/// Common interface of the validator and the mock: invoke an action by name.
class ActionBackend {
 public:
  virtual ~ActionBackend() = default;
  virtual Verdict invoke(std::string_view action, std::vector<Value> args) = 0;
  virtual const TypedModelProgram& program() const = 0;
  virtual StateStore& state() = 0;
};

/// Converts `args` to the action's parameter types (ArgTypeMismatch).
std::vector<Value> coerce_args(const ActionInfo& info, const std::vector<Value>& args);

/// Applies the program's init block, then `overrides` in order
/// (InitTypeMismatch when a value does not fit its field).
void apply_init(const TypedModelProgram& program, StateStore& state,
                const std::vector<StateWrite>& overrides = {});

}  // namespace gk

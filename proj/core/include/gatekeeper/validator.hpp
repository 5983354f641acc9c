#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string_view>
#include <vector>

#include "gatekeeper/engine.hpp"
#include "gatekeeper/service.hpp"

namespace gk {

class TraceWriter;

enum class ViolationPolicy { Abort, Record };

struct ValidatorOptions {
  ViolationPolicy policy = ViolationPolicy::Abort;
  /// Receives the init event at construction and one record per action.
  std::shared_ptr<TraceWriter> trace;
  /// Applied after the init block, in order.
  std::vector<StateWrite> init_overrides;
};

/// Runs actions against a bound service, asserting every constraint.
///
/// A `return E` reached before the untrusted call still invokes the service
/// with the action's arguments and requires its result to equal E. An
/// `await requires` is evaluated once, after the service returned.
/// Sessions over models that are not thread safe reject concurrent
/// invocations with ConcurrencyError.
class ValidatorSession : public ActionBackend {
 public:
  ValidatorSession(ProgramPtr program, ServiceBinding binding, ValidatorOptions options = {});

  Verdict invoke(std::string_view action, std::vector<Value> args) override;
  /// Same as invoke, also returning everything the execution produced.
  ActionRecord invoke_recorded(std::string_view action, std::vector<Value> args);

  const TypedModelProgram& program() const override { return *program_; }
  StateStore& state() override { return state_; }
  ServiceBinding& binding() { return binding_; }
  std::uint64_t next_seq() const { return seq_.load(); }
  void set_policy(ViolationPolicy policy) { options_.policy = policy; }

 private:
  ProgramPtr program_;
  ServiceBinding binding_;
  ValidatorOptions options_;
  StateStore state_;
  std::atomic<std::uint64_t> seq_{0};
  std::atomic<int> in_flight_{0};
};

}  // namespace gk

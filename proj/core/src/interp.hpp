#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gatekeeper/constraint.hpp"
#include "gatekeeper/engine.hpp"
#include "gatekeeper/frontend.hpp"
#include "gatekeeper/state.hpp"

namespace gk::detail {

/// Tree-walking executor of one action body. Engines subclass it and decide
/// what the untrusted call, pre-call returns, failed assertions and awaits
/// mean.
class Interpreter {
 public:
  Interpreter(const ActionInfo& info, StateStore& state, const std::vector<Value>& args);
  virtual ~Interpreter() = default;
  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  /// Executes the body. Returns nullopt when a hook stopped execution.
  std::optional<Value> run();

  const Bindings& vars() const { return vars_; }
  Bindings param_values() const;
  bool call_done() const { return call_done_; }

  std::vector<StateWrite> writes;
  std::vector<ExternEvent> externs;
  std::vector<AssertEvent> asserts;

 protected:
  /// Thrown by hooks to stop execution without an error.
  struct Halt {};

  /// Produces the untrusted call's result; may rewrite byte-array args.
  virtual Value untrusted_call(const Stmt& site, const ExternCall& call, std::vector<Value>& args,
                               const GkType& ret_type) = 0;
  /// `return expected` reached before the untrusted call.
  virtual Value early_return(const Value& expected) = 0;
  /// Outcome of every requires (awaits included, after waiting).
  virtual void checked(const Requires& r, bool ok) = 0;
  /// `await requires` inside an atomic block; `lock` holds its map.
  virtual void await(const Requires& r, AtomicLock& lock) = 0;

  bool holds_now(const Expr& e) const;
  const ActionInfo& info() const { return info_; }
  StateStore& store() { return state_; }

 private:
  enum class Flow { Next, Return };

  Flow exec_block(const std::vector<Stmt>& body);
  Flow exec(const Stmt& s);
  Value eval(const Expr& e) const;
  Value eval_rhs(const Stmt& s, const Expr& rhs, const GkType& target_type);
  void assign(const Expr& target, const Value& v);
  Value read_lvalue(const Expr& target) const;
  Key eval_key(const MapRef& m) const;

  const ActionInfo& info_;
  StateStore& state_;
  Bindings vars_;
  bool call_done_ = false;
  Value result_;
  std::vector<AtomicLock*> locks_;
};

}  // namespace gk::detail

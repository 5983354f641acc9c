#include "gatekeeper/validator.hpp"

#include "gatekeeper/error.hpp"
#include "gatekeeper/trace.hpp"
#include "interp.hpp"

namespace gk {

namespace {

class ValidatorRun final : public detail::Interpreter {
 public:
  ValidatorRun(const ActionInfo& info, StateStore& state, const std::vector<Value>& args,
               const ServiceBinding& binding, ViolationPolicy policy, std::uint64_t seq)
      : Interpreter(info, state, args), binding_(binding), policy_(policy), seq_(seq) {}

  std::vector<Violation> violations;

 protected:
  Value untrusted_call(const Stmt&, const ExternCall& call, std::vector<Value>& args,
                       const GkType& ret_type) override {
    Value ret = binding_.call(call.fn, args);
    if (ret_type.is_int() && (!ret.is_int() || !fits(ret_type.int_kind(), ret.as_int()))) {
      // An unrepresentable result cannot be bound; stop regardless of policy.
      externs.push_back({call.fn, args, ret});
      fail(call.fn + " result fits " + ret_type.to_string(), bindings_with(ret));
      throw Halt{};
    }
    return ret;
  }

  Value early_return(const Value& expected) override {
    if (!info().call_mirrors_params) {
      throw Error(ErrorCode::DesignError, "action '" + info().decl->name +
                                              "' returns before a call that does not mirror its parameters");
    }
    std::vector<Value> args;
    for (const auto& p : info().decl->params) args.push_back(vars().at(p.name));
    Value ret = binding_.call(info().untrusted_fn, args);
    externs.push_back({info().untrusted_fn, args, ret});
    const bool ok = ret.is_int() && ret.as_int() == expected.as_int();
    const std::string src = info().untrusted_fn + " returns " + expected.to_string();
    asserts.push_back({src, ok});
    if (!ok) {
      fail(src, bindings_with(ret));
      if (policy_ == ViolationPolicy::Abort) throw Halt{};
    }
    return expected;
  }

  void checked(const Requires& r, bool ok) override {
    if (ok) return;
    fail(print_expr(r.cond), vars());
    if (policy_ == ViolationPolicy::Abort) throw Halt{};
  }

  // The service already blocked; the condition must hold now.
  void await(const Requires& r, AtomicLock&) override {
    const bool ok = holds_now(r.cond);
    asserts.push_back({print_expr(r.cond), ok});
    checked(r, ok);
  }

 private:
  Bindings bindings_with(const Value& ret) const {
    Bindings b = vars();
    b[info().decl->result.name] = ret;
    return b;
  }

  void fail(std::string constraint, Bindings bindings) {
    violations.push_back({std::move(constraint), std::move(bindings), info().decl->name, seq_});
  }

  const ServiceBinding& binding_;
  ViolationPolicy policy_;
  std::uint64_t seq_;
};

}  // namespace

ValidatorSession::ValidatorSession(ProgramPtr program, ServiceBinding binding, ValidatorOptions options)
    : program_(std::move(program)),
      binding_(std::move(binding)),
      options_(std::move(options)),
      state_(program_->program.maps) {
  binding_.require_complete(*program_);
  apply_init(*program_, state_, options_.init_overrides);
  if (options_.trace) options_.trace->write_init(*program_, state_, options_.policy);
}

Verdict ValidatorSession::invoke(std::string_view action, std::vector<Value> args) {
  return invoke_recorded(action, std::move(args)).verdict;
}

ActionRecord ValidatorSession::invoke_recorded(std::string_view action, std::vector<Value> args) {
  const ActionInfo& info = program_->action(action);
  std::vector<Value> typed = coerce_args(info, args);

  struct Guard {
    std::atomic<int>* counter = nullptr;
    ~Guard() {
      if (counter) counter->fetch_sub(1);
    }
  } guard;
  if (!program_->thread_safe) {
    if (in_flight_.fetch_add(1) != 0) {
      in_flight_.fetch_sub(1);
      throw Error(ErrorCode::ConcurrencyError,
                  "model '" + program_->name() + "' sessions are single-threaded");
    }
    guard.counter = &in_flight_;
  }

  ActionRecord rec;
  rec.seq = seq_.fetch_add(1);
  rec.action = std::string(action);
  rec.args = typed;
  Verdict& v = rec.verdict;
  v.action = rec.action;
  v.seq = rec.seq;

  ValidatorRun run(info, state_, typed, binding_, options_.policy, rec.seq);
  try {
    auto ret = run.run();
    if (!run.violations.empty()) {
      v.outcome = Verdict::Outcome::Violation;
      v.violation = run.violations.front();
      v.recorded = run.violations;
    } else if (ret) {
      v.ret = *ret;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ServiceUnavailable) throw;
    v = Verdict{};
    v.action = rec.action;
    v.seq = rec.seq;
    v.outcome = Verdict::Outcome::ModelError;
    v.error_code = e.code();
    v.error = e.what();
  }
  v.outputs = run.param_values();
  rec.externs = std::move(run.externs);
  rec.asserts = std::move(run.asserts);
  rec.delta = std::move(run.writes);
  if (options_.trace) options_.trace->write(*program_, rec);
  return rec;
}

}  // namespace gk

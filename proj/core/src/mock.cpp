#include "gatekeeper/mock.hpp"

#include "gatekeeper/error.hpp"
#include "interp.hpp"

namespace gk {

namespace {

Expr typed_name(const std::string& name, const GkType& type) {
  Expr e = make_expr(NameRef{name, NameKind::Variable, 0});
  e.type = type;
  return e;
}

Expr at_least_zero(const std::string& name, const GkType& type) {
  Expr zero = make_expr(IntLit{0});
  zero.type = GkType::integer(IntKind::Wide);
  Expr e = make_expr(Binary{BinaryOp::Ge, Box<Expr>(typed_name(name, type)), Box<Expr>(std::move(zero))});
  e.type = GkType::boolean();
  return e;
}

bool mentions_any(const std::vector<Expr>& cs, const std::string& name) {
  for (const auto& c : cs) {
    for (const auto& v : free_variables(c)) {
      if (v == name) return true;
    }
  }
  return false;
}

class MockRun final : public detail::Interpreter {
 public:
  MockRun(const ActionInfo& info, StateStore& state, const std::vector<Value>& args, Solver& solver,
          std::uint64_t seed, bool prefer_success, const std::vector<ScopedConstraint>& scoped)
      : Interpreter(info, state, args),
        solver_(solver),
        seed_(seed),
        prefer_success_(prefer_success),
        scoped_(scoped) {}

 protected:
  Value untrusted_call(const Stmt& site, const ExternCall& call, std::vector<Value>& args,
                       const GkType& ret_type) override {
    std::string target;
    if (const auto* d = site.as<LocalDecl>()) target = d->name;
    if (const auto* a = site.as<Assign>()) {
      if (const auto* n = a->target.as<NameRef>()) target = n->name;
    }

    SolveRequest req;
    for (const auto& sc : scoped_) {
      if (!sc.await) req.constraints.push_back(sc.guarded());
    }
    if (!target.empty()) req.unknowns.push_back(make_unknown(target, ret_type));
    std::vector<std::pair<std::size_t, std::string>> arrays;
    for (std::size_t i = 0; i < call.args.size(); ++i) {
      const auto* n = call.args[i].as<NameRef>();
      if (n == nullptr || n->kind != NameKind::Variable || n->name == target) continue;
      const GkType& t = info().variables.at(n->name);
      if (!t.is_array() || !mentions_any(req.constraints, n->name)) continue;
      req.unknowns.push_back(make_unknown(n->name, t, args[i]));
      arrays.emplace_back(i, n->name);
    }
    req.bindings = vars();
    for (const auto& u : req.unknowns) req.bindings.erase(u.name);
    req.state = &store();
    req.seed = seed_;
    req.mode = SolveMode::Satisfy;

    SolveResult res;
    if (prefer_success_ && !target.empty() && ret_type.is_int()) {
      SolveRequest success = req;
      success.constraints.push_back(at_least_zero(target, ret_type));
      res = solver_.solve(success);
    }
    if (!res.ok()) res = solver_.solve(req);
    if (!res.ok() || res.solutions.empty()) {
      throw Error(ErrorCode::ModelUnsat, "no result of " + call.fn + " satisfies the constraints of '" +
                                             info().decl->name + "'");
    }
    const Bindings& sol = res.solutions.front();
    for (const auto& [i, name] : arrays) args[i] = sol.at(name);
    return target.empty() ? Value::integer(IntKind::Int, 0) : sol.at(target);
  }

  Value early_return(const Value& expected) override { return expected; }

  void checked(const Requires& r, bool ok) override {
    if (ok) return;
    throw Error(call_done() ? ErrorCode::ModelUnsat : ErrorCode::PreconditionFailed,
                "requires (" + print_expr(r.cond) + ") in '" + info().decl->name + "'");
  }

  void await(const Requires& r, AtomicLock& lock) override {
    lock.wait_until([&] { return holds_now(r.cond); });
    asserts.push_back({print_expr(r.cond), true});
  }

 private:
  Solver& solver_;
  std::uint64_t seed_;
  bool prefer_success_;
  const std::vector<ScopedConstraint>& scoped_;
};

}  // namespace

MockSession::MockSession(ProgramPtr program, MockOptions options)
    : program_(std::move(program)), options_(std::move(options)), state_(program_->program.maps) {
  if (!options_.solver) options_.solver = std::make_shared<BoundedSolver>();
  apply_init(*program_, state_, options_.init_overrides);
}

const std::vector<ScopedConstraint>& MockSession::site_constraints(const ActionInfo& info) {
  static const std::vector<ScopedConstraint> kNone;
  if (info.untrusted_call == nullptr) return kNone;
  std::lock_guard lock(cache_mu_);
  auto it = cache_.find(info.untrusted_call);
  if (it == cache_.end()) {
    it = cache_.emplace(info.untrusted_call, collect_scoped_constraints(info, info.untrusted_call)).first;
  }
  return it->second;
}

Value MockSession::mock_invoke(std::string_view action, std::vector<Value>& args) {
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
      throw Error(ErrorCode::ConcurrencyError, "model '" + program_->name() + "' sessions are single-threaded");
    }
    guard.counter = &in_flight_;
  }
  const std::uint64_t seq = seq_.fetch_add(1);
  MockRun run(info, state_, typed, *options_.solver, options_.seed ^ seq, options_.prefer_success,
              site_constraints(info));
  auto ret = run.run();
  const Bindings out = run.param_values();
  for (std::size_t i = 0; i < info.decl->params.size(); ++i) args[i] = out.at(info.decl->params[i].name);
  return *ret;
}

Verdict MockSession::invoke(std::string_view action, std::vector<Value> args) {
  Verdict v;
  v.action = std::string(action);
  v.seq = seq_.load();
  try {
    v.ret = mock_invoke(action, args);
    const ActionInfo& info = program_->action(action);
    for (std::size_t i = 0; i < info.decl->params.size(); ++i) v.outputs[info.decl->params[i].name] = args[i];
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownAction || e.code() == ErrorCode::ArgTypeMismatch ||
        e.code() == ErrorCode::ConcurrencyError) {
      throw;
    }
    v.outcome = Verdict::Outcome::ModelError;
    v.error_code = e.code();
    v.error = e.what();
  }
  return v;
}

ServiceBinding mock_binding(std::shared_ptr<MockSession> mock) {
  ServiceBinding b("mock");
  for (const auto& [name, info] : mock->program().actions) {
    if (info.untrusted_fn.empty() || !info.call_mirrors_params || b.has(info.untrusted_fn)) continue;
    const std::string action = name;
    b.bind(info.untrusted_fn, [mock, action](std::vector<Value>& args) { return mock->mock_invoke(action, args); });
  }
  b.retain(mock);
  return b;
}

}  // namespace gk

#include "gatekeeper/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "gatekeeper/error.hpp"
#include "gatekeeper/validator.hpp"
#include "interp.hpp"
#include "json_io.hpp"

namespace gk {

using detail::Json;

namespace {

/// Outputs of an action's untrusted call: the assigned variable and the
/// byte-array variables passed by name.
struct CallShape {
  std::string target;  // empty when the result is discarded
  GkType ret_type = GkType::integer(IntKind::Int);
  const ExternCall* call = nullptr;
  std::vector<std::pair<std::size_t, std::string>> arrays;
};

CallShape shape_of(const ActionInfo& info) {
  CallShape s;
  const Stmt* site = info.untrusted_call;
  if (site == nullptr) return s;
  if (const auto* d = site->as<LocalDecl>()) {
    s.target = d->name;
    s.ret_type = d->type;
    s.call = d->init.as<ExternCall>();
  } else if (const auto* a = site->as<Assign>()) {
    if (const auto* n = a->target.as<NameRef>()) s.target = n->name;
    s.ret_type = a->target.type;
    s.call = a->value.as<ExternCall>();
  } else if (const auto* c = site->as<CallStmt>()) {
    s.call = c->call.as<ExternCall>();
  }
  if (s.call == nullptr) return s;
  for (std::size_t i = 0; i < s.call->args.size(); ++i) {
    const auto* n = s.call->args[i].as<NameRef>();
    if (n == nullptr || n->kind != NameKind::Variable || n->name == s.target) continue;
    auto it = info.variables.find(n->name);
    if (it != info.variables.end() && it->second.is_array()) s.arrays.emplace_back(i, n->name);
  }
  return s;
}

Expr typed_name(const std::string& name, const GkType& type) {
  Expr e = make_expr(NameRef{name, NameKind::Variable, 0});
  e.type = type;
  return e;
}

Expr equals_literal(const std::string& name, const GkType& type, WideInt v) {
  Expr lit = make_expr(IntLit{v});
  lit.type = GkType::integer(IntKind::Wide);
  Expr e = make_expr(Binary{BinaryOp::Eq, Box<Expr>(typed_name(name, type)), Box<Expr>(std::move(lit))});
  e.type = GkType::boolean();
  return e;
}

bool mentions(const std::vector<Expr>& cs, const std::string& name) {
  for (const auto& c : cs) {
    for (const auto& v : free_variables(c)) {
      if (v == name) return true;
    }
  }
  return false;
}

/// Runs an action up to its untrusted call (or a return before it) and
/// stops there, leaving the store as the call would see it.
class Probe final : public detail::Interpreter {
 public:
  using Interpreter::Interpreter;

  bool reached_call = false;
  std::optional<Value> early;
  std::vector<Value> call_args;

 protected:
  Value untrusted_call(const Stmt&, const ExternCall&, std::vector<Value>& args, const GkType&) override {
    reached_call = true;
    call_args = args;
    throw Halt{};
  }
  Value early_return(const Value& expected) override {
    early = expected;
    throw Halt{};
  }
  void checked(const Requires& r, bool ok) override {
    if (!ok) throw Error(ErrorCode::PreconditionFailed, "requires (" + print_expr(r.cond) + ") before the call");
  }
  void await(const Requires& r, AtomicLock&) override {
    if (!holds_now(r.cond)) throw Error(ErrorCode::PreconditionFailed, "await before the call would block");
  }
};

std::uint64_t point_seed(std::uint64_t seed, std::size_t point) {
  return seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(point) + 1));
}

}  // namespace

std::string_view to_string(InjectionMode mode) { return mode == InjectionMode::Raw ? "raw" : "shielded"; }

std::string_view to_string(InjectionOutcome outcome) {
  switch (outcome) {
    case InjectionOutcome::Clean: return "CLEAN";
    case InjectionOutcome::TargetFault: return "TARGET_FAULT";
    case InjectionOutcome::ValidatorCaught: return "VALIDATOR_CAUGHT";
  }
  return "?";
}

std::vector<Bindings> generate_malicious(const TypedModelProgram& program, const StateSnapshot& state,
                                         std::string_view action, const std::vector<Value>& args,
                                         std::size_t budget, std::uint64_t seed, bool hints, bool allow_partial) {
  if (budget == 0) return {};
  const ActionInfo& info = program.action(action);
  const CallShape shape = shape_of(info);
  if (shape.call == nullptr) {
    throw Error(ErrorCode::DomainExhausted, "action '" + std::string(action) + "' makes no untrusted call");
  }
  const std::string target = shape.target.empty() ? std::string("result") : shape.target;

  StateStore store(program.program.maps);
  store.restore(state);
  const std::vector<Value> typed = coerce_args(info, args);
  Probe probe(info, store, typed);
  probe.run();
  if (!probe.reached_call && !probe.early) {
    throw Error(ErrorCode::PreconditionFailed, "action '" + std::string(action) + "' returns without a call");
  }

  SolveRequest req;
  if (probe.early) {
    // Before the call the only obligation is that the service agrees.
    req.constraints.push_back(equals_literal(target, shape.ret_type, probe.early->as_int()));
    req.unknowns.push_back(make_unknown(target, shape.ret_type));
  } else {
    for (const auto& sc : collect_scoped_constraints(info, info.untrusted_call)) {
      if (!sc.await) req.constraints.push_back(sc.guarded());
    }
    req.unknowns.push_back(make_unknown(target, shape.ret_type));
    for (const auto& [i, name] : shape.arrays) {
      if (mentions(req.constraints, name)) req.unknowns.push_back(make_unknown(name, info.variables.at(name), probe.call_args[i]));
    }
  }
  req.bindings = probe.vars();
  for (const auto& u : req.unknowns) req.bindings.erase(u.name);
  req.state = &store;
  req.seed = seed;
  req.mode = SolveMode::Violate;
  if (hints && info.decl->hints) req.hints = *info.decl->hints;
  req.max_solutions = budget;

  SolveResult res = BoundedSolver().solve_violations(req);
  if (res.status != SolveResult::Status::Solutions && !allow_partial) {
    throw Error(ErrorCode::DomainExhausted, "only " + std::to_string(res.solutions.size()) + " of " +
                                               std::to_string(budget) + " violating outputs exist for '" +
                                               std::string(action) + "'");
  }
  return res.solutions;
}

void apply_assignment(const ActionInfo& info, const Bindings& assignment, std::vector<Value>& args, Value& ret) {
  const CallShape shape = shape_of(info);
  const std::string target = shape.target.empty() ? std::string("result") : shape.target;
  if (auto it = assignment.find(target); it != assignment.end()) ret = Value::wide(it->second.as_int());
  for (const auto& [i, name] : shape.arrays) {
    auto it = assignment.find(name);
    if (it != assignment.end() && i < args.size()) args[i] = it->second;
  }
}

bool validator_rejects(ProgramPtr program, const StateSnapshot& state, std::string_view action,
                       const std::vector<Value>& args, const Bindings& assignment) {
  const ActionInfo& info = program->action(action);
  ServiceBinding oracle("oracle");
  for (const auto& [name, other] : program->actions) {
    if (other.untrusted_fn.empty() || oracle.has(other.untrusted_fn)) continue;
    oracle.bind(other.untrusted_fn, [&info, &assignment, fn = other.untrusted_fn](std::vector<Value>& a) {
      if (fn != info.untrusted_fn) throw Error(ErrorCode::ServiceUnavailable, "oracle serves one call only");
      Value ret = Value::wide(0);
      apply_assignment(info, assignment, a, ret);
      return ret;
    });
  }
  ValidatorSession session(program, oracle);
  session.state().restore(state);
  return session.invoke(action, args).outcome == Verdict::Outcome::Violation;
}

std::size_t FuzzCampaignReport::count(InjectionOutcome outcome) const {
  return static_cast<std::size_t>(
      std::count_if(injections.begin(), injections.end(), [&](const auto& r) { return r.outcome == outcome; }));
}

std::string FuzzCampaignReport::to_json() const {
  Json doc;
  doc["mode"] = std::string(to_string(mode));
  if (!target.empty()) doc["target"] = target;
  doc["injection_points"] = points.size();
  doc["total"] = total();
  doc["validator_caught"] = count(InjectionOutcome::ValidatorCaught);
  doc["target_fault"] = count(InjectionOutcome::TargetFault);
  doc["clean"] = count(InjectionOutcome::Clean);
  doc["fault_signatures"] = fault_signatures;
  Json arr = Json::array();
  for (const auto& r : injections) {
    Json j;
    j["point"] = r.point;
    j["action"] = r.action;
    j["seq"] = r.seq;
    Json inj = Json::object();
    for (const auto& [k, v] : r.injected) inj[k] = detail::value_to_json(v);
    j["injected"] = std::move(inj);
    j["outcome"] = std::string(to_string(r.outcome));
    if (!r.signature.empty()) j["signature"] = r.signature;
    j["model_violation"] = r.model_violation;
    arr.push_back(std::move(j));
  }
  doc["injections"] = std::move(arr);
  return doc.dump(2) + "\n";
}

FuzzCampaignReport run_campaign(const FuzzPlan& plan, const TestScript& scenario, InjectionMode mode,
                                FuzzTarget* target) {
  if (!plan.program) throw Error(ErrorCode::ScenarioError, "fuzz plan has no program");
  if (mode == InjectionMode::Raw && target == nullptr) {
    throw Error(ErrorCode::ScenarioError, "raw campaigns need a target");
  }
  const ProgramPtr program = plan.program;
  check_script(scenario, *program);

  FuzzCampaignReport rep;
  rep.mode = mode;
  if (target != nullptr && mode == InjectionMode::Raw) rep.target = target->name();

  // Clean run: record where each untrusted call happens.
  {
    ServiceBinding service = correct_service(program->name());
    ValidatorSession session(program, service);
    Bindings bound;
    for (std::size_t i = 0; i < scenario.steps.size(); ++i) {
      const ScriptStep& st = scenario.steps[i];
      InjectionPoint pt;
      pt.step = i;
      pt.action = st.action;
      pt.args = resolve_args(st, bound);
      pt.call_index = service.calls();
      pt.state = session.state().snapshot();
      Verdict v = session.invoke(st.action, pt.args);
      if (!v.ok()) throw Error(ErrorCode::ScenarioError, "scenario step " + std::to_string(i) + " fails cleanly: " + v.to_string());
      if (auto why = check_step(st, v, program->action(st.action), bound)) {
        throw Error(ErrorCode::ScenarioError, "scenario step " + std::to_string(i) + ": " + *why);
      }
      if (st.bind) bound[*st.bind] = v.ret;
      const bool targeted = plan.actions.empty() ||
                            std::find(plan.actions.begin(), plan.actions.end(), st.action) != plan.actions.end();
      if (service.calls() == pt.call_index + 1 && targeted) rep.points.push_back(std::move(pt));
    }
  }

  struct Job {
    std::size_t point;
    Bindings assignment;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < rep.points.size(); ++p) {
    const auto& pt = rep.points[p];
    for (auto& a : generate_malicious(*program, pt.state, pt.action, pt.args, plan.budget,
                                      point_seed(plan.seed, p), plan.hints, true)) {
      jobs.push_back({p, std::move(a)});
    }
  }

  rep.injections.resize(jobs.size());
  auto run_one = [&](std::size_t j) {
    const Job& job = jobs[j];
    const InjectionPoint& pt = rep.points[job.point];
    const ActionInfo& info = program->action(pt.action);
    InjectionRecord rec;
    rec.point = job.point;
    rec.action = pt.action;
    rec.seq = pt.step;
    rec.injected = job.assignment;
    rec.model_violation = validator_rejects(program, pt.state, pt.action, pt.args, job.assignment);

    ServiceBinding service = correct_service(program->name());
    service.set_fault_injector([&](const CallInfo& call, std::vector<Value>& args, Value& ret) {
      if (call.index == pt.call_index) apply_assignment(info, job.assignment, args, ret);
    });
    if (mode == InjectionMode::Shielded) {
      ValidatorSession session(program, service);
      ScriptResult r = run_script(scenario, session, BackendKind::ValidatorCorrect);
      if (r.pass) {
        rec.outcome = InjectionOutcome::Clean;
      } else if (r.reason == FailReason::Violation) {
        rec.outcome = InjectionOutcome::ValidatorCaught;
        rec.signature = r.detail;
      } else {
        rec.outcome = InjectionOutcome::TargetFault;
        rec.signature = std::string(to_string(r.reason));
      }
    } else {
      try {
        target->run(scenario, service);
        rec.outcome = InjectionOutcome::Clean;
      } catch (const TargetFault& f) {
        rec.outcome = InjectionOutcome::TargetFault;
        rec.signature = f.signature();
      } catch (const Error& e) {
        rec.outcome = InjectionOutcome::TargetFault;
        rec.signature = "error:" + std::string(to_string(e.code()));
      }
    }
    rep.injections[j] = std::move(rec);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(plan.jobs, static_cast<unsigned>(jobs.size())));
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_one(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mu;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
          try {
            run_one(j);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  std::set<std::string> sigs;
  for (const auto& r : rep.injections) {
    if (r.outcome == InjectionOutcome::TargetFault) sigs.insert(r.signature);
  }
  rep.fault_signatures.assign(sigs.begin(), sigs.end());
  return rep;
}

}  // namespace gk

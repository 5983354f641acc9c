#include "gatekeeper/engine.hpp"

#include "gatekeeper/error.hpp"

namespace gk {

std::string_view to_string(Verdict::Outcome outcome) {
  switch (outcome) {
    case Verdict::Outcome::Ok: return "ok";
    case Verdict::Outcome::Violation: return "violation";
    case Verdict::Outcome::ModelError: return "model_error";
  }
  return "?";
}

std::string Verdict::to_string() const {
  std::string out = "#" + std::to_string(seq) + " " + action + ": ";
  switch (outcome) {
    case Outcome::Ok: return out + "ok " + ret.to_string();
    case Outcome::Violation: return out + "violation of (" + (violation ? violation->constraint : "") + ")";
    case Outcome::ModelError: return out + "model error " + error;
  }
  return out;
}

std::vector<Value> coerce_args(const ActionInfo& info, const std::vector<Value>& args) {
  const auto& params = info.decl->params;
  if (args.size() != params.size()) {
    throw Error(ErrorCode::ArgTypeMismatch, "action '" + info.decl->name + "' takes " +
                                                std::to_string(params.size()) + " arguments, got " +
                                                std::to_string(args.size()));
  }
  std::vector<Value> out;
  out.reserve(args.size());
  for (std::size_t i = 0; i < args.size(); ++i) {
    try {
      out.push_back(args[i].coerce_to(params[i].type));
    } catch (const Error& e) {
      throw Error(ErrorCode::ArgTypeMismatch,
                  "argument '" + params[i].name + "' of '" + info.decl->name + "': " + e.detail());
    }
  }
  return out;
}

void apply_init(const TypedModelProgram& program, StateStore& state,
                const std::vector<StateWrite>& overrides) {
  Bindings none;
  for (const auto& ia : program.program.init) {
    const auto* f = ia.target.as<FieldRef>();
    const auto* m = f ? f->base->as<MapRef>() : nullptr;
    if (m == nullptr) throw Error(ErrorCode::InitTypeMismatch, "init target is not a map field");
    try {
      Evaluator ev(state, none);
      Key key;
      const MapDecl& decl = state.decl(m->map);
      for (std::size_t i = 0; i < m->keys.size(); ++i) key.push_back(ev.eval(m->keys[i]).coerce_to(decl.keys[i].type));
      state.set(m->map, key, f->field, ev.eval(ia.value));
    } catch (const Error& e) {
      throw Error(ErrorCode::InitTypeMismatch, "init of " + m->map + "." + f->field + ": " + e.detail());
    }
  }
  for (const auto& w : overrides) {
    try {
      if (w.field.empty()) {
        state.erase(w.map, w.key);
      } else {
        const MapDecl& decl = state.decl(w.map);
        Key key;
        for (std::size_t i = 0; i < w.key.size() && i < decl.keys.size(); ++i) key.push_back(w.key[i].coerce_to(decl.keys[i].type));
        state.set(w.map, key, w.field, w.value);
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::InitTypeMismatch, "override of " + w.map + "." + w.field + ": " + e.detail());
    }
  }
}

}  // namespace gk

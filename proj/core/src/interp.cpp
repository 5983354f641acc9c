#include "interp.hpp"

#include <algorithm>

#include "gatekeeper/error.hpp"
#include "gatekeeper/trusted.hpp"

namespace gk::detail {

namespace {

std::size_t length_of(const Value& v) {
  if (v.is_bytes()) return v.as_bytes().size();
  if (v.is_list()) return v.as_list().size();
  if (v.is_str()) return v.as_str().size();
  throw Error(ErrorCode::TypeMismatch, "value is not an array: " + v.to_string());
}

std::size_t to_index(WideInt i, const char* what) {
  if (i < 0 || i > static_cast<WideInt>(kMaxArrayLength)) {
    throw Error(ErrorCode::OutOfBounds, std::string(what) + " " + wide_to_string(i) + " out of bounds");
  }
  return static_cast<std::size_t>(i);
}

// Replaces [lo, lo + len(src)) of `dst`, growing it with zeros when `grow`.
Value splice(Value dst, std::size_t lo, const Value& src, bool grow) {
  const std::size_t n = length_of(src);
  const std::size_t hi = lo + n;
  if (hi > kMaxArrayLength) throw Error(ErrorCode::OutOfBounds, "array would exceed the length limit");
  if (dst.is_bytes()) {
    auto& bytes = dst.mutable_bytes();
    if (hi > bytes.size()) {
      if (!grow) throw Error(ErrorCode::OutOfBounds, "slice assignment past the end of a variable");
      bytes.resize(hi, 0);
    }
    const auto& s = src.as_bytes();
    std::copy(s.begin(), s.end(), bytes.begin() + static_cast<std::ptrdiff_t>(lo));
    return dst;
  }
  auto& items = dst.mutable_list();
  if (hi > items.size()) {
    if (!grow) throw Error(ErrorCode::OutOfBounds, "slice assignment past the end of a variable");
    const Value zero = items.empty() ? Value::integer(IntKind::Int, 0) : Value::zero_of(GkType());
    items.resize(hi, zero);
  }
  const auto& s = src.as_list();
  std::copy(s.begin(), s.end(), items.begin() + static_cast<std::ptrdiff_t>(lo));
  return dst;
}

}  // namespace

Interpreter::Interpreter(const ActionInfo& info, StateStore& state, const std::vector<Value>& args)
    : info_(info), state_(state) {
  const auto& params = info.decl->params;
  for (std::size_t i = 0; i < params.size() && i < args.size(); ++i) vars_[params[i].name] = args[i];
  result_ = Value::zero_of(info.decl->result.type);
  vars_[info.decl->result.name] = result_;
}

Bindings Interpreter::param_values() const {
  Bindings out;
  for (const auto& p : info_.decl->params) out[p.name] = vars_.at(p.name);
  return out;
}

std::optional<Value> Interpreter::run() {
  try {
    if (exec_block(info_.decl->body) == Flow::Next) result_ = vars_.at(info_.decl->result.name);
  } catch (const Halt&) {
    return std::nullopt;
  }
  return result_;
}

bool Interpreter::holds_now(const Expr& e) const { return holds(e, state_, vars_); }

Value Interpreter::eval(const Expr& e) const {
  Evaluator ev(state_, vars_);
  return ev.eval(e);
}

Key Interpreter::eval_key(const MapRef& m) const {
  const MapDecl& decl = state_.decl(m.map);
  Key key;
  key.reserve(m.keys.size());
  for (std::size_t i = 0; i < m.keys.size(); ++i) {
    Value v = eval(m.keys[i]);
    key.push_back(i < decl.keys.size() ? v.coerce_to(decl.keys[i].type) : v);
  }
  return key;
}

Interpreter::Flow Interpreter::exec_block(const std::vector<Stmt>& body) {
  for (const auto& s : body) {
    if (exec(s) == Flow::Return) return Flow::Return;
  }
  return Flow::Next;
}

Value Interpreter::eval_rhs(const Stmt& s, const Expr& rhs, const GkType& target_type) {
  const auto* call = rhs.as<ExternCall>();
  if (call == nullptr) return eval(rhs);
  std::vector<Value> args;
  args.reserve(call->args.size());
  for (const auto& a : call->args) args.push_back(eval(a));
  if (is_trusted_extern(call->fn)) {
    Value ret = call_trusted(call->fn, args);
    externs.push_back({call->fn, args, ret});
    return ret;
  }
  Value ret = untrusted_call(s, *call, args, target_type);
  call_done_ = true;
  // Buffers passed by name receive the service's output.
  for (std::size_t i = 0; i < call->args.size(); ++i) {
    if (const auto* n = call->args[i].as<NameRef>(); n && n->kind == NameKind::Variable) {
      auto it = vars_.find(n->name);
      if (it != vars_.end() && (it->second.is_bytes() || it->second.is_list())) it->second = args[i];
    }
  }
  externs.push_back({call->fn, args, ret});
  return ret;
}

Interpreter::Flow Interpreter::exec(const Stmt& s) {
  if (const auto* d = s.as<LocalDecl>()) {
    vars_[d->name] = eval_rhs(s, d->init, d->type).coerce_to(d->type);
    return Flow::Next;
  }
  if (const auto* a = s.as<Assign>()) {
    GkType type = a->target.type;
    if (const auto* n = a->target.as<NameRef>()) type = info_.variables.at(n->name);
    assign(a->target, eval_rhs(s, a->value, type));
    return Flow::Next;
  }
  if (const auto* r = s.as<Requires>()) {
    if (r->await) {
      if (locks_.empty()) throw Error(ErrorCode::DesignError, "await outside an atomic block");
      await(*r, *locks_.back());
      return Flow::Next;
    }
    const bool ok = holds_now(r->cond);
    asserts.push_back({print_expr(r->cond), ok});
    checked(*r, ok);
    return Flow::Next;
  }
  if (const auto* at = s.as<Atomic>()) {
    const auto* m = at->target.as<MapRef>();
    if (m == nullptr) throw Error(ErrorCode::DesignError, "atomic target is not a map entry");
    AtomicLock lock = state_.lock_atomic(m->map);
    locks_.push_back(&lock);
    struct Pop {
      std::vector<AtomicLock*>& v;
      ~Pop() { v.pop_back(); }
    } pop{locks_};
    return exec_block(at->body);
  }
  if (const auto* i = s.as<If>()) {
    return exec_block(eval(i->cond).as_bool() ? i->then_body : i->else_body);
  }
  if (const auto* b = s.as<Block>()) return exec_block(b->body);
  if (const auto* r = s.as<Return>()) {
    if (!r->value) {
      result_ = vars_.at(info_.decl->result.name);
      return Flow::Return;
    }
    Value v = eval(*r->value);
    const GkType& type = info_.decl->result.type;
    if (!call_done_ && !info_.untrusted_fn.empty()) {
      result_ = early_return(v.coerce_to(type));
    } else {
      result_ = v.coerce_to(type);
    }
    vars_[info_.decl->result.name] = result_;
    return Flow::Return;
  }
  if (const auto* c = s.as<CallStmt>()) {
    eval_rhs(s, c->call, GkType::integer(IntKind::Wide));
    return Flow::Next;
  }
  if (const auto* d = s.as<Delete>()) {
    const auto* m = d->target.as<MapRef>();
    if (m == nullptr) throw Error(ErrorCode::DesignError, "delete target is not a map entry");
    Key key = eval_key(*m);
    state_.erase(m->map, key);
    writes.push_back({m->map, std::move(key), "", Value::null()});
    return Flow::Next;
  }
  return Flow::Next;
}

Value Interpreter::read_lvalue(const Expr& target) const {
  if (const auto* f = target.as<FieldRef>()) {
    if (const auto* m = f->base->as<MapRef>()) {
      const MapDecl& decl = state_.decl(m->map);
      auto v = state_.get_field(m->map, eval_key(*m), f->field);
      if (v) return *v;
      const Param* p = decl.find_field(f->field);
      if (p == nullptr) throw Error(ErrorCode::UnknownField, m->map + "." + f->field);
      return Value::zero_of(p->type);
    }
  }
  return eval(target);
}

void Interpreter::assign(const Expr& target, const Value& v) {
  if (const auto* n = target.as<NameRef>()) {
    vars_[n->name] = v.coerce_to(info_.variables.at(n->name));
    return;
  }
  if (const auto* f = target.as<FieldRef>()) {
    const auto* m = f->base->as<MapRef>();
    if (m == nullptr) throw Error(ErrorCode::DesignError, "field assignment target is not a map entry");
    Key key = eval_key(*m);
    state_.set(m->map, key, f->field, v);
    writes.push_back({m->map, key, f->field, *state_.get_field(m->map, key, f->field)});
    return;
  }
  // Partial writes: read the whole array, patch it, write it back. Map-entry
  // arrays grow with zeros; variables must already be long enough.
  const bool grows = [&] {
    const Expr* base = target.as<SliceRef>() ? target.as<SliceRef>()->base.get()
                       : target.as<IndexRef>() ? target.as<IndexRef>()->base.get()
                                               : nullptr;
    return base != nullptr && base->as<FieldRef>() != nullptr;
  }();
  if (const auto* sl = target.as<SliceRef>()) {
    const std::size_t lo = to_index(eval(*sl->lo).as_int(), "slice start");
    const std::size_t hi = to_index(eval(*sl->hi).as_int(), "slice end");
    if (hi < lo) throw Error(ErrorCode::OutOfBounds, "slice end before start");
    if (length_of(v) != hi - lo) {
      throw Error(ErrorCode::OutOfBounds, "slice assignment of " + std::to_string(length_of(v)) +
                                              " elements into a slice of " + std::to_string(hi - lo));
    }
    assign(*sl->base, splice(read_lvalue(*sl->base), lo, v, grows));
    return;
  }
  if (const auto* ix = target.as<IndexRef>()) {
    const std::size_t i = to_index(eval(*ix->index).as_int(), "index");
    Value base = read_lvalue(*ix->base);
    Value one = base.is_bytes() ? Value::bytes({static_cast<std::uint8_t>(v.coerce_to(GkType::integer(IntKind::Char)).as_int())})
                                : Value::list({v});
    assign(*ix->base, splice(std::move(base), i, one, grows));
    return;
  }
  throw Error(ErrorCode::DesignError, "unsupported assignment target");
}

}  // namespace gk::detail

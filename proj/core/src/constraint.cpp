#include "gatekeeper/constraint.hpp"

#include <algorithm>
#include <set>

#include "gatekeeper/error.hpp"

namespace gk {

namespace {

const WideInt kWideLimit = static_cast<WideInt>(1) << 120;

Value checked(WideInt v) {
  if (v > kWideLimit || v < -kWideLimit) throw Error(ErrorCode::RangeError, "integer overflow");
  return Value::wide(v);
}

WideInt arith(BinaryOp op, WideInt a, WideInt b) {
  WideInt r = 0;
  switch (op) {
    case BinaryOp::Add:
      if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorCode::RangeError, "integer overflow");
      return r;
    case BinaryOp::Sub:
      if (__builtin_sub_overflow(a, b, &r)) throw Error(ErrorCode::RangeError, "integer overflow");
      return r;
    case BinaryOp::Mul:
      if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::RangeError, "integer overflow");
      return r;
    case BinaryOp::Div:
      if (b == 0) throw Error(ErrorCode::RangeError, "division by zero");
      return a / b;
    case BinaryOp::Mod:
      if (b == 0) throw Error(ErrorCode::RangeError, "division by zero");
      return a % b;
    case BinaryOp::Shl:
      if (b < 0 || b >= 64) throw Error(ErrorCode::RangeError, "shift out of range");
      if (__builtin_mul_overflow(a, static_cast<WideInt>(1) << static_cast<int>(b), &r)) {
        throw Error(ErrorCode::RangeError, "integer overflow");
      }
      return r;
    case BinaryOp::Shr:
      if (b < 0 || b >= 64) throw Error(ErrorCode::RangeError, "shift out of range");
      return a >> static_cast<int>(b);
    case BinaryOp::BitAnd: return a & b;
    case BinaryOp::BitOr: return a | b;
    case BinaryOp::BitXor: return a ^ b;
    default: break;
  }
  throw Error(ErrorCode::TypeMismatch, "not an arithmetic operator");
}

Value zero_element(const GkType& array_type) {
  if (array_type.is_array() && !array_type.is_byte_array()) return Value::zero_of(array_type.element());
  return Value::integer(IntKind::Char, 0);
}

}  // namespace

const Value* Evaluator::lookup(std::string_view name) const {
  if (overlay_ != nullptr) {
    auto it = overlay_->find(name);
    if (it != overlay_->end()) return &it->second;
  }
  auto it = vars_.find(name);
  return it == vars_.end() ? nullptr : &it->second;
}

Value Evaluator::eval(const Expr& e) {
  if (const auto* i = e.as<IntLit>()) return Value::wide(i->value);
  if (const auto* c = e.as<CharLit>()) return Value::integer(IntKind::Char, c->value);
  if (const auto* s = e.as<StrLit>()) return Value::str(s->value);
  if (const auto* b = e.as<BoolLit>()) return Value::boolean(b->value);
  if (e.as<NullLit>()) return Value::null();
  if (const auto* n = e.as<NameRef>()) {
    if (n->kind == NameKind::Constant) return Value::wide(n->constant);
    for (auto it = quant_.rbegin(); it != quant_.rend(); ++it) {
      if (it->first == n->name) return it->second;
    }
    if (const Value* v = lookup(n->name)) return *v;
    if (auto c = builtin_constant(n->name)) return Value::wide(*c);
    throw Error(ErrorCode::UnboundVariable, "'" + n->name + "' is not bound");
  }
  if (const auto* u = e.as<Unary>()) {
    const Value v = eval(*u->operand);
    if (u->op == UnaryOp::Not) return Value::boolean(!v.as_bool());
    return checked(-v.as_int());
  }
  if (const auto* b = e.as<Binary>()) return eval_binary(*b);
  if (const auto* m = e.as<MapRef>()) {
    Key key;
    key.reserve(m->keys.size());
    for (const auto& k : m->keys) key.push_back(eval(k));
    return state_.get(m->map, key);
  }
  if (e.as<FieldRef>()) {
    bool sparse = false;
    return eval_access(e, sparse);
  }
  if (const auto* ix = e.as<IndexRef>()) {
    bool sparse = false;
    const Value base = eval_access(*ix->base, sparse);
    const WideInt i = eval(*ix->index).as_int();
    if (i < 0) throw Error(ErrorCode::OutOfBounds, "negative index");
    if (base.is_bytes()) {
      const auto& d = base.as_bytes();
      if (i < static_cast<WideInt>(d.size())) return Value::integer(IntKind::Char, d[static_cast<std::size_t>(i)]);
    } else if (base.is_str()) {
      const auto& s = base.as_str();
      if (i < static_cast<WideInt>(s.size())) {
        return Value::integer(IntKind::Char, static_cast<unsigned char>(s[static_cast<std::size_t>(i)]));
      }
      sparse = false;
    } else {
      const auto& l = base.as_list();
      if (i < static_cast<WideInt>(l.size())) return l[static_cast<std::size_t>(i)];
    }
    if (sparse) return zero_element(ix->base->type);
    throw Error(ErrorCode::OutOfBounds, "index " + wide_to_string(i) + " past end");
  }
  if (const auto* sl = e.as<SliceRef>()) {
    bool sparse = false;
    const Value base = eval_access(*sl->base, sparse);
    const WideInt lo = eval(*sl->lo).as_int();
    const WideInt hi = eval(*sl->hi).as_int();
    if (lo < 0 || hi < lo) {
      throw Error(ErrorCode::OutOfBounds,
                  "bad slice [" + wide_to_string(lo) + ":" + wide_to_string(hi) + "]");
    }
    if (hi - lo > static_cast<WideInt>(kMaxArrayLength)) {
      throw Error(ErrorCode::OutOfBounds, "slice longer than the array limit");
    }
    const auto ulo = static_cast<std::size_t>(lo);
    const auto uhi = static_cast<std::size_t>(hi);
    if (base.is_bytes()) {
      const auto& d = base.as_bytes();
      if (uhi > d.size() && !sparse) {
        throw Error(ErrorCode::OutOfBounds, "slice end " + wide_to_string(hi) + " past length " +
                                                std::to_string(d.size()));
      }
      std::vector<std::uint8_t> out(uhi - ulo, 0);
      for (std::size_t i = ulo; i < std::min(uhi, d.size()); ++i) out[i - ulo] = d[i];
      return Value::bytes(std::move(out));
    }
    const auto& l = base.as_list();
    if (uhi > l.size() && !sparse) {
      throw Error(ErrorCode::OutOfBounds, "slice end past length");
    }
    std::vector<Value> out;
    out.reserve(uhi - ulo);
    for (std::size_t i = ulo; i < uhi; ++i) {
      out.push_back(i < l.size() ? l[i] : zero_element(sl->base->type));
    }
    return Value::list(std::move(out));
  }
  if (const auto* bc = e.as<BuiltinCall>()) {
    const Value v = eval(bc->args.at(0));
    if (v.is_bytes()) return Value::wide(static_cast<WideInt>(v.as_bytes().size()));
    if (v.is_str()) return Value::wide(static_cast<WideInt>(v.as_str().size()));
    return Value::wide(static_cast<WideInt>(v.as_list().size()));
  }
  if (const auto* q = e.as<Quantifier>()) {
    const auto keys = state_.keys(q->map);
    for (const auto& k : keys) {
      quant_.emplace_back(q->var, k.at(0));
      bool r = false;
      try {
        r = eval_bool(*q->body);
      } catch (...) {
        quant_.pop_back();
        throw;
      }
      quant_.pop_back();
      if (q->universal && !r) return Value::boolean(false);
      if (!q->universal && r) return Value::boolean(true);
    }
    return Value::boolean(q->universal);
  }
  throw Error(ErrorCode::DesignError, "extern calls cannot be evaluated as expressions");
}

// Evaluates an array/record-producing base, reporting whether it is a
// map-entry field (sparse storage).
Value Evaluator::eval_access(const Expr& base, bool& sparse) {
  if (const auto* f = base.as<FieldRef>()) {
    if (const auto* m = f->base->as<MapRef>()) {
      Key key;
      key.reserve(m->keys.size());
      for (const auto& k : m->keys) key.push_back(eval(k));
      auto v = state_.get_field(m->map, key, f->field);
      if (!v) {
        throw Error(ErrorCode::NullDereference,
                    m->map + "(" + (key.empty() ? "" : key[0].to_string()) + ") is NULL");
      }
      sparse = true;
      return std::move(*v);
    }
    const Value rec = eval(*f->base);
    if (rec.is_null()) throw Error(ErrorCode::NullDereference, "field access on NULL");
    const Value* v = rec.field(f->field);
    if (v == nullptr) throw Error(ErrorCode::UnknownField, "no field '" + f->field + "'");
    sparse = true;
    return *v;
  }
  sparse = false;
  return eval(base);
}

Value Evaluator::eval_binary(const Binary& b) {
  switch (b.op) {
    case BinaryOp::And: return Value::boolean(eval_bool(*b.lhs) && eval_bool(*b.rhs));
    case BinaryOp::Or: return Value::boolean(eval_bool(*b.lhs) || eval_bool(*b.rhs));
    case BinaryOp::Implies: return Value::boolean(!eval_bool(*b.lhs) || eval_bool(*b.rhs));
    default: break;
  }
  if (b.op == BinaryOp::Eq || b.op == BinaryOp::Ne) {
    const Expr* other = nullptr;
    if (b.rhs->as<NullLit>()) other = b.lhs.get();
    if (b.lhs->as<NullLit>()) other = b.rhs.get();
    bool eq = false;
    if (other != nullptr) {
      if (const auto* m = other->as<MapRef>()) {
        Key key;
        for (const auto& k : m->keys) key.push_back(eval(k));
        eq = !state_.contains(m->map, key);
      } else {
        eq = eval(*other).is_null();
      }
    } else {
      eq = eval(*b.lhs) == eval(*b.rhs);
    }
    return Value::boolean(b.op == BinaryOp::Eq ? eq : !eq);
  }
  const WideInt l = eval(*b.lhs).as_int();
  const WideInt r = eval(*b.rhs).as_int();
  switch (b.op) {
    case BinaryOp::Lt: return Value::boolean(l < r);
    case BinaryOp::Le: return Value::boolean(l <= r);
    case BinaryOp::Gt: return Value::boolean(l > r);
    case BinaryOp::Ge: return Value::boolean(l >= r);
    default: return checked(arith(b.op, l, r));
  }
}

bool evaluate(const Expr& c, const StateStore& state, const Bindings& bindings) {
  return Evaluator(state, bindings).eval_bool(c);
}

bool is_evaluation_fault(ErrorCode code) {
  return code == ErrorCode::NullDereference || code == ErrorCode::OutOfBounds ||
         code == ErrorCode::RangeError;
}

bool holds(const Expr& c, const StateStore& state, const Bindings& bindings,
           const Bindings* overlay) {
  try {
    return Evaluator(state, bindings, overlay).eval_bool(c);
  } catch (const Error& e) {
    if (is_evaluation_fault(e.code())) return false;
    throw;
  }
}

// ----------------------------------------------------------- expressions

Expr conjunction(const std::vector<Expr>& parts) {
  if (parts.empty()) return make_expr(BoolLit{true});
  Expr out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    Expr next = make_expr(Binary{BinaryOp::And, Box<Expr>(std::move(out)), Box<Expr>(parts[i])});
    next.type = GkType::boolean();
    out = std::move(next);
  }
  return out;
}

Expr negation(const Expr& e) {
  Expr out = make_expr(Unary{UnaryOp::Not, Box<Expr>(e)}, e.loc);
  out.type = GkType::boolean();
  return out;
}

Expr ScopedConstraint::guarded() const {
  if (path_condition.empty()) return constraint;
  Expr out = make_expr(Binary{BinaryOp::Implies, Box<Expr>(conjunction(path_condition)),
                              Box<Expr>(constraint)});
  out.type = GkType::boolean();
  return out;
}

namespace {

void collect_free(const Expr& e, std::vector<std::string>& out, std::vector<std::string>& bound) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, NameRef>) {
          if (n.kind == NameKind::Constant) return;
          if (std::find(bound.begin(), bound.end(), n.name) != bound.end()) return;
          if (n.kind == NameKind::Unresolved && builtin_constant(n.name)) return;
          if (std::find(out.begin(), out.end(), n.name) == out.end()) out.push_back(n.name);
        } else if constexpr (std::is_same_v<T, Unary>) {
          collect_free(*n.operand, out, bound);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect_free(*n.lhs, out, bound);
          collect_free(*n.rhs, out, bound);
        } else if constexpr (std::is_same_v<T, MapRef>) {
          for (const auto& k : n.keys) collect_free(k, out, bound);
        } else if constexpr (std::is_same_v<T, BuiltinCall> || std::is_same_v<T, ExternCall>) {
          for (const auto& k : n.args) collect_free(k, out, bound);
        } else if constexpr (std::is_same_v<T, FieldRef>) {
          collect_free(*n.base, out, bound);
        } else if constexpr (std::is_same_v<T, IndexRef>) {
          collect_free(*n.base, out, bound);
          collect_free(*n.index, out, bound);
        } else if constexpr (std::is_same_v<T, SliceRef>) {
          collect_free(*n.base, out, bound);
          collect_free(*n.lo, out, bound);
          collect_free(*n.hi, out, bound);
        } else if constexpr (std::is_same_v<T, Quantifier>) {
          bound.push_back(n.var);
          collect_free(*n.body, out, bound);
          bound.pop_back();
        }
      },
      e.node);
}

// Symbolic state along one path of the collector walk.
struct PathState {
  std::vector<Expr> pc;
  std::map<std::string, Expr> env;  // variable -> defining expression
  struct Write {
    Expr target;  // map(k).field with substituted keys
    std::optional<Expr> value;  // nullopt: contents unknown (partial write)
  };
  std::vector<Write> writes;
  std::set<std::string> opaque;  // variables whose value is not expressible
};

struct WalkFrame {
  const std::vector<Stmt>* body;
  std::size_t next;
  std::string atomic;
};

class Collector {
 public:
  explicit Collector(std::vector<ScopedConstraint>& out) : out_(out) {}

  void walk(std::vector<WalkFrame> stack, PathState st) {
    while (!stack.empty()) {
      WalkFrame& top = stack.back();
      if (top.next >= top.body->size()) {
        stack.pop_back();
        continue;
      }
      const Stmt& s = (*top.body)[top.next++];
      const std::string atomic = top.atomic;
      if (const auto* r = s.as<Requires>()) {
        std::vector<std::string> fv;
        std::vector<std::string> bound;
        collect_free(r->cond, fv, bound);
        if (std::any_of(fv.begin(), fv.end(), [&](const auto& v) { return st.opaque.count(v) != 0; })) {
          continue;
        }
        out_.push_back(ScopedConstraint{subst(r->cond, st), st.pc, r->await, atomic, print_expr(r->cond)});
      } else if (const auto* d = s.as<LocalDecl>()) {
        bind(d->name, d->init, st);
      } else if (const auto* a = s.as<Assign>()) {
        if (const auto* n = a->target.as<NameRef>()) {
          bind(n->name, a->value, st);
        } else {
          record_write(a->target, a->value, st);
        }
      } else if (const auto* at = s.as<Atomic>()) {
        const auto* m = at->target.as<MapRef>();
        stack.push_back(WalkFrame{&at->body, 0, m ? m->map : atomic});
      } else if (const auto* b = s.as<Block>()) {
        stack.push_back(WalkFrame{&b->body, 0, atomic});
      } else if (const auto* i = s.as<If>()) {
        const Expr cond = subst(i->cond, st);
        PathState then_st = st;
        then_st.pc.push_back(cond);
        auto then_stack = stack;
        then_stack.push_back(WalkFrame{&i->then_body, 0, atomic});
        walk(std::move(then_stack), std::move(then_st));
        st.pc.push_back(negation(cond));
        stack.push_back(WalkFrame{&i->else_body, 0, atomic});
      } else if (s.as<Return>()) {
        return;
      } else if (const auto* del = s.as<Delete>()) {
        // Later reads of the deleted entry are left to the live state.
        const auto* m = del->target.as<MapRef>();
        if (m) {
          st.writes.erase(std::remove_if(st.writes.begin(), st.writes.end(),
                                         [&](const PathState::Write& w) {
                                           return w.target.as<FieldRef>()->base->as<MapRef>()->map == m->map;
                                         }),
                          st.writes.end());
        }
      }
    }
  }

 private:
  void bind(const std::string& name, const Expr& value, PathState& st) {
    if (value.as<ExternCall>()) {
      st.env.erase(name);
      st.opaque.insert(name);
      return;
    }
    Expr v = subst(value, st);
    st.opaque.erase(name);
    st.env[name] = std::move(v);
  }

  void record_write(const Expr& target, const Expr& value, PathState& st) {
    const Expr* root = &target;
    while (true) {
      if (const auto* ix = root->as<IndexRef>()) {
        root = ix->base.get();
      } else if (const auto* sl = root->as<SliceRef>()) {
        root = sl->base.get();
      } else {
        break;
      }
    }
    const auto* f = root->as<FieldRef>();
    if (f == nullptr || !f->base->as<MapRef>()) return;
    Expr key_target = subst(*root, st);
    std::optional<Expr> v;
    if (root == &target && !value.as<ExternCall>()) v = subst(value, st);
    st.writes.erase(std::remove_if(st.writes.begin(), st.writes.end(),
                                   [&](const PathState::Write& w) { return w.target == key_target; }),
                    st.writes.end());
    if (v) {
      st.writes.push_back(PathState::Write{std::move(key_target), std::move(v)});
    } else {
      st.writes.push_back(PathState::Write{std::move(key_target), std::nullopt});
    }
  }

  Expr subst(const Expr& e, const PathState& st) {
    Expr out = e;
    rewrite(out, st, {});
    return out;
  }

  void rewrite(Expr& e, const PathState& st, std::vector<std::string> bound) {
    if (auto* n = e.as<NameRef>()) {
      if (n->kind == NameKind::Constant || n->kind == NameKind::QuantVar) return;
      if (std::find(bound.begin(), bound.end(), n->name) != bound.end()) return;
      auto it = st.env.find(n->name);
      if (it != st.env.end()) {
        const GkType t = e.type;
        e = it->second;
        if (e.type.is_void()) e.type = t;
      }
      return;
    }
    std::visit(
        [&](auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Unary>) {
            rewrite(*n.operand, st, bound);
          } else if constexpr (std::is_same_v<T, Binary>) {
            rewrite(*n.lhs, st, bound);
            rewrite(*n.rhs, st, bound);
          } else if constexpr (std::is_same_v<T, MapRef>) {
            for (auto& k : n.keys) rewrite(k, st, bound);
          } else if constexpr (std::is_same_v<T, BuiltinCall> || std::is_same_v<T, ExternCall>) {
            for (auto& k : n.args) rewrite(k, st, bound);
          } else if constexpr (std::is_same_v<T, FieldRef>) {
            rewrite(*n.base, st, bound);
          } else if constexpr (std::is_same_v<T, IndexRef>) {
            rewrite(*n.base, st, bound);
            rewrite(*n.index, st, bound);
          } else if constexpr (std::is_same_v<T, SliceRef>) {
            rewrite(*n.base, st, bound);
            rewrite(*n.lo, st, bound);
            rewrite(*n.hi, st, bound);
          } else if constexpr (std::is_same_v<T, Quantifier>) {
            bound.push_back(n.var);
            rewrite(*n.body, st, bound);
          }
        },
        e.node);
    // A read of a field written earlier on this path sees the written value.
    if (e.as<FieldRef>() && e.as<FieldRef>()->base->as<MapRef>()) {
      for (auto it = st.writes.rbegin(); it != st.writes.rend(); ++it) {
        if (it->target == e) {
          if (it->value) {
            const GkType t = e.type;
            e = *it->value;
            if (!t.is_void()) e.type = t;
          }
          return;
        }
      }
    }
  }

  std::vector<ScopedConstraint>& out_;
};

// Finds the chain of frames leading to `site`; true when found.
bool locate(const std::vector<Stmt>& body, const Stmt* site, const std::string& atomic,
            std::vector<WalkFrame>& chain) {
  for (std::size_t i = 0; i < body.size(); ++i) {
    const Stmt& s = body[i];
    chain.push_back(WalkFrame{&body, i + 1, atomic});
    if (&s == site) return true;
    if (const auto* at = s.as<Atomic>()) {
      const auto* m = at->target.as<MapRef>();
      if (locate(at->body, site, m ? m->map : atomic, chain)) return true;
    } else if (const auto* b = s.as<Block>()) {
      if (locate(b->body, site, atomic, chain)) return true;
    } else if (const auto* f = s.as<If>()) {
      if (locate(f->then_body, site, atomic, chain)) return true;
      if (locate(f->else_body, site, atomic, chain)) return true;
    }
    chain.pop_back();
  }
  return false;
}

}  // namespace

std::vector<std::string> free_variables(const Expr& e) {
  std::vector<std::string> out;
  std::vector<std::string> bound;
  collect_free(e, out, bound);
  return out;
}

std::vector<ScopedConstraint> collect_scoped_constraints(const ActionInfo& action,
                                                         const Stmt* site) {
  std::vector<ScopedConstraint> out;
  std::vector<WalkFrame> stack;
  if (site == nullptr) {
    stack.push_back(WalkFrame{&action.decl->body, 0, ""});
  } else if (!locate(action.decl->body, site, "", stack)) {
    throw Error(ErrorCode::DesignError, "statement is not part of action '" + action.decl->name + "'");
  }
  Collector(out).walk(std::move(stack), PathState{});
  return out;
}

}  // namespace gk

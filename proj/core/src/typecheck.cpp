// Static checks: name resolution, typing, untrusted-call placement, atomic
// nesting. Stops at the first diagnostic.

#include <algorithm>
#include <functional>
#include <set>

#include "gatekeeper/frontend.hpp"
#include "gatekeeper/trusted.hpp"

namespace gk {

namespace {

struct CheckFailure {
  Diagnostic diag;
};

[[noreturn]] void fail(ErrorCode code, SourceLoc loc, std::string message) {
  throw CheckFailure{Diagnostic{code, loc, std::move(message)}};
}

const GkType kWide = GkType::integer(IntKind::Wide);
const GkType kBool = GkType::boolean();
const GkType kString = GkType::string();

bool assignable(const GkType& target, const GkType& value) {
  if (target.is_int()) return value.is_int();
  if (target.is_string()) return value.is_string();
  if (target.is_byte_array()) return value.is_byte_array();
  if (target.is_array()) return value.is_array() && target == value;
  return false;
}

bool comparable_eq(const GkType& a, const GkType& b) {
  if (a.is_int() && b.is_int()) return true;
  if (a.is_string() && b.is_string()) return true;
  if (a.is_bool() && b.is_bool()) return true;
  if (a.is_byte_array() && b.is_byte_array()) return true;
  if (a.is_array() && b.is_array()) return a == b;
  if (a.is_null()) return b.is_record() || b.is_null();
  if (b.is_null()) return a.is_record();
  return false;
}

void collect_names(const Expr& e, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, NameRef>) {
          out.insert(n.name);
        } else if constexpr (std::is_same_v<T, Unary>) {
          collect_names(*n.operand, out);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect_names(*n.lhs, out);
          collect_names(*n.rhs, out);
        } else if constexpr (std::is_same_v<T, MapRef>) {
          for (const auto& k : n.keys) collect_names(k, out);
        } else if constexpr (std::is_same_v<T, BuiltinCall> || std::is_same_v<T, ExternCall>) {
          for (const auto& k : n.args) collect_names(k, out);
        } else if constexpr (std::is_same_v<T, FieldRef>) {
          collect_names(*n.base, out);
        } else if constexpr (std::is_same_v<T, IndexRef>) {
          collect_names(*n.base, out);
          collect_names(*n.index, out);
        } else if constexpr (std::is_same_v<T, SliceRef>) {
          collect_names(*n.base, out);
          collect_names(*n.lo, out);
          collect_names(*n.hi, out);
        } else if constexpr (std::is_same_v<T, Quantifier>) {
          collect_names(*n.body, out);
        }
      },
      e.node);
}

class Checker {
 public:
  explicit Checker(TypedModelProgram& typed) : typed_(typed), prog_(typed.program) {}

  void run() {
    check_maps();
    check_init();
    std::set<std::string> names;
    for (auto& a : prog_.actions) {
      if (!names.insert(a.name).second) {
        fail(ErrorCode::DuplicateName, a.loc, "duplicate action '" + a.name + "'");
      }
      check_action(a);
    }
    typed_.thread_safe = std::none_of(typed_.actions.begin(), typed_.actions.end(),
                                      [](const auto& kv) { return kv.second.writes_outside_atomic; });
  }

 private:
  // ---------------------------------------------------------------- maps
  void check_maps() {
    std::set<std::string> names;
    for (const auto& m : prog_.maps) {
      if (!names.insert(m.name).second) {
        fail(ErrorCode::DuplicateName, m.loc, "duplicate map '" + m.name + "'");
      }
      if (builtin_constant(m.name)) {
        fail(ErrorCode::DuplicateName, m.loc, "map '" + m.name + "' shadows a builtin constant");
      }
      std::set<std::string> members;
      for (const auto& k : m.keys) {
        if (!members.insert(k.name).second) {
          fail(ErrorCode::DuplicateName, m.loc, "duplicate key '" + k.name + "' in " + m.name);
        }
        if (!k.type.is_int() && !k.type.is_string()) {
          fail(ErrorCode::TypeMismatch, m.loc,
               "map key '" + k.name + "' must be an integer or string");
        }
      }
      for (const auto& f : m.fields) {
        if (!members.insert(f.name).second) {
          fail(ErrorCode::DuplicateName, m.loc, "duplicate field '" + f.name + "' in " + m.name);
        }
        if (f.type.is_void()) {
          fail(ErrorCode::TypeMismatch, m.loc, "field '" + f.name + "' cannot be void");
        }
      }
    }
  }

  void check_init() {
    for (auto& ia : prog_.init) {
      const auto* f = ia.target.as<FieldRef>();
      if (f == nullptr || !f->base->as<MapRef>()) {
        fail(ErrorCode::SyntaxError, ia.loc, "init target must be map(key).field");
      }
      const GkType t = type_expr(ia.target);
      const GkType v = type_expr(ia.value);
      if (!assignable(t, v)) {
        fail(ErrorCode::TypeMismatch, ia.loc,
             "cannot initialize " + t.to_string() + " with " + v.to_string());
      }
    }
  }

  // ------------------------------------------------------------- actions
  void declare(const std::string& name, const GkType& type, SourceLoc loc) {
    if (!info_->variables.emplace(name, type).second) {
      fail(ErrorCode::DuplicateName, loc, "duplicate variable '" + name + "' in " + action_->name);
    }
    visible_.insert(name);
  }

  void check_action(ActionDecl& a) {
    ActionInfo info;
    info.decl = &a;
    info_ = &info;
    action_ = &a;
    visible_.clear();
    seen_untrusted_ = false;
    atomic_stack_.clear();
    output_name_.clear();
    untrusted_sites_ = 0;
    find_output_name(a.body);

    for (const auto& p : a.params) {
      if (p.type.is_void()) fail(ErrorCode::TypeMismatch, a.loc, "parameter cannot be void");
      declare(p.name, p.type, a.loc);
    }
    declare(a.result.name, a.result.type, a.loc);
    for (auto& s : a.body) check_stmt(s);
    if (a.hints) {
      // Hints are evaluated at the untrusted call with every variable in scope.
      for (const auto& [name, type] : info.variables) visible_.insert(name);
      const GkType h = type_expr(*a.hints);
      if (!h.is_bool()) fail(ErrorCode::TypeMismatch, a.hints->loc, "fuzz hint must be boolean");
    }
    info_ = nullptr;
    typed_.actions.emplace(a.name, std::move(info));
  }

  // Finds the variable bound by the untrusted call, for the placement rule.
  void find_output_name(const std::vector<Stmt>& body) {
    for (const auto& s : body) {
      if (const auto* d = s.as<LocalDecl>()) {
        if (const auto* x = d->init.as<ExternCall>(); x && !is_trusted_extern(x->fn)) {
          if (output_name_.empty()) output_name_ = d->name;
        }
      } else if (const auto* as = s.as<Assign>()) {
        const auto* x = as->value.as<ExternCall>();
        const auto* n = as->target.as<NameRef>();
        if (x && n && !is_trusted_extern(x->fn) && output_name_.empty()) output_name_ = n->name;
      } else if (const auto* at = s.as<Atomic>()) {
        find_output_name(at->body);
      } else if (const auto* i = s.as<If>()) {
        find_output_name(i->then_body);
        find_output_name(i->else_body);
      } else if (const auto* b = s.as<Block>()) {
        find_output_name(b->body);
      }
    }
  }

  void check_lvalue(const Expr& target, SourceLoc loc) {
    const Expr* root = &target;
    for (;;) {
      if (const auto* f = root->as<FieldRef>()) {
        root = f->base.get();
      } else if (const auto* i = root->as<IndexRef>()) {
        root = i->base.get();
      } else if (const auto* s = root->as<SliceRef>()) {
        root = s->base.get();
      } else {
        break;
      }
    }
    if (const auto* n = root->as<NameRef>()) {
      if (visible_.count(n->name) == 0) {
        fail(ErrorCode::UnknownIdentifier, loc, "unknown variable '" + n->name + "'");
      }
      return;
    }
    if (root->as<MapRef>() && root != &target) {
      if (atomic_stack_.empty()) info_->writes_outside_atomic = true;
      return;
    }
    fail(ErrorCode::SyntaxError, loc, "invalid assignment target " + print_expr(target));
  }

  GkType type_extern(ExternCall& call, SourceLoc loc, const GkType* bound_type) {
    if (const auto* sig = trusted_signature(call.fn)) {
      if (sig->params.size() != call.args.size()) {
        fail(ErrorCode::ArityMismatch, loc,
             call.fn + " expects " + std::to_string(sig->params.size()) + " arguments");
      }
      for (std::size_t i = 0; i < call.args.size(); ++i) {
        const GkType t = type_expr(call.args[i]);
        if (!assignable(sig->params[i], t)) {
          fail(ErrorCode::TypeMismatch, call.args[i].loc,
               "argument " + std::to_string(i + 1) + " of " + call.fn + " must be " +
                   sig->params[i].to_string());
        }
      }
      return sig->result;
    }
    ++untrusted_sites_;
    if (untrusted_sites_ > 1) {
      fail(ErrorCode::DesignError, loc,
           "action '" + action_->name + "' has more than one untrusted extern call");
    }
    for (auto& arg : call.args) type_expr(arg);
    seen_untrusted_ = true;
    info_->untrusted_fn = call.fn;
    info_->call_mirrors_params = call.args.size() == action_->params.size();
    for (std::size_t i = 0; info_->call_mirrors_params && i < call.args.size(); ++i) {
      const auto* n = call.args[i].as<NameRef>();
      info_->call_mirrors_params = n != nullptr && n->name == action_->params[i].name;
    }
    return bound_type ? *bound_type : GkType::void_type();
  }

  void check_stmt(Stmt& s) {
    const SourceLoc loc = s.loc;
    std::visit(
        [&](auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, LocalDecl>) {
            if (n.type.is_void()) fail(ErrorCode::TypeMismatch, loc, "local cannot be void");
            if (auto* x = n.init.template as<ExternCall>()) {
              const bool untrusted = !is_trusted_extern(x->fn);
              const GkType t = type_extern(*x, loc, &n.type);
              n.init.type = t;
              if (untrusted) info_->untrusted_call = &s;
              if (!assignable(n.type, t)) {
                fail(ErrorCode::TypeMismatch, loc,
                     "cannot assign " + t.to_string() + " to " + n.type.to_string());
              }
            } else {
              const GkType t = type_expr(n.init);
              if (!assignable(n.type, t)) {
                fail(ErrorCode::TypeMismatch, loc,
                     "cannot assign " + t.to_string() + " to " + n.name + ": " +
                         n.type.to_string());
              }
            }
            declare(n.name, n.type, loc);
          } else if constexpr (std::is_same_v<T, Assign>) {
            check_lvalue(n.target, loc);
            const GkType target = type_expr(n.target);
            GkType value;
            if (auto* x = n.value.template as<ExternCall>()) {
              const bool untrusted = !is_trusted_extern(x->fn);
              value = type_extern(*x, loc, &target);
              n.value.type = value;
              if (untrusted) info_->untrusted_call = &s;
            } else {
              value = type_expr(n.value);
            }
            if (!assignable(target, value)) {
              fail(ErrorCode::TypeMismatch, loc,
                   "cannot assign " + value.to_string() + " to " + target.to_string());
            }
          } else if constexpr (std::is_same_v<T, Requires>) {
            if (!seen_untrusted_ && !output_name_.empty()) {
              std::set<std::string> names;
              collect_names(n.cond, names);
              if (names.count(output_name_) != 0) {
                fail(ErrorCode::IllegalRequiresPlacement, loc,
                     "'" + output_name_ + "' is referenced before the untrusted call");
              }
            }
            if (n.await) {
              if (atomic_stack_.empty()) {
                fail(ErrorCode::DesignError, loc, "await requires must be inside atomic");
              }
              info_->has_await = true;
            }
            const GkType t = type_expr(n.cond);
            if (!t.is_bool()) fail(ErrorCode::TypeMismatch, loc, "requires needs a boolean");
          } else if constexpr (std::is_same_v<T, Atomic>) {
            const auto* m = n.target.template as<MapRef>();
            if (m == nullptr) fail(ErrorCode::SyntaxError, loc, "atomic target must be map(key)");
            type_expr(n.target);
            if (std::find(atomic_stack_.begin(), atomic_stack_.end(), m->map) !=
                atomic_stack_.end()) {
              fail(ErrorCode::DesignError, loc, "re-entrant atomic on map '" + m->map + "'");
            }
            atomic_stack_.push_back(m->map);
            for (auto& inner : n.body) check_stmt(inner);
            atomic_stack_.pop_back();
          } else if constexpr (std::is_same_v<T, If>) {
            if (!type_expr(n.cond).is_bool()) {
              fail(ErrorCode::TypeMismatch, loc, "if condition must be boolean");
            }
            for (auto& inner : n.then_body) check_stmt(inner);
            for (auto& inner : n.else_body) check_stmt(inner);
          } else if constexpr (std::is_same_v<T, Block>) {
            for (auto& inner : n.body) check_stmt(inner);
          } else if constexpr (std::is_same_v<T, Return>) {
            const GkType& rt = action_->result.type;
            if (n.value) {
              const GkType t = type_expr(*n.value);
              if (rt.is_void() || !assignable(rt, t)) {
                fail(ErrorCode::TypeMismatch, loc,
                     "cannot return " + t.to_string() + " from action returning " +
                         rt.to_string());
              }
            }
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            auto* x = n.call.template as<ExternCall>();
            const bool untrusted = !is_trusted_extern(x->fn);
            n.call.type = type_extern(*x, loc, nullptr);
            if (untrusted) info_->untrusted_call = &s;
          } else if constexpr (std::is_same_v<T, Delete>) {
            if (!n.target.template as<MapRef>()) fail(ErrorCode::SyntaxError, loc, "delete needs map(key)");
            type_expr(n.target);
            if (atomic_stack_.empty()) info_->writes_outside_atomic = true;
          }
        },
        s.node);
  }

  // --------------------------------------------------------- expressions
  GkType type_expr(Expr& e) {
    e.type = compute(e);
    return e.type;
  }

  GkType compute(Expr& e) {
    const SourceLoc loc = e.loc;
    if (e.as<IntLit>()) return kWide;
    if (e.as<CharLit>()) return GkType::integer(IntKind::Char);
    if (e.as<StrLit>()) return kString;
    if (e.as<BoolLit>()) return kBool;
    if (e.as<NullLit>()) return GkType::null();
    if (auto* n = e.as<NameRef>()) {
      for (auto it = quant_vars_.rbegin(); it != quant_vars_.rend(); ++it) {
        if (it->first == n->name) {
          n->kind = NameKind::QuantVar;
          return it->second;
        }
      }
      if (info_ != nullptr && visible_.count(n->name) != 0) {
        n->kind = NameKind::Variable;
        return info_->variables.at(n->name);
      }
      if (auto c = builtin_constant(n->name)) {
        n->kind = NameKind::Constant;
        n->constant = *c;
        return kWide;
      }
      fail(ErrorCode::UnknownIdentifier, loc, "unknown identifier '" + n->name + "'");
    }
    if (auto* u = e.as<Unary>()) {
      const GkType t = type_expr(*u->operand);
      if (u->op == UnaryOp::Not) {
        if (!t.is_bool()) fail(ErrorCode::TypeMismatch, loc, "'not' needs a boolean operand");
        return kBool;
      }
      if (!t.is_int()) fail(ErrorCode::TypeMismatch, loc, "'-' needs an integer operand");
      return kWide;
    }
    if (auto* b = e.as<Binary>()) {
      const GkType l = type_expr(*b->lhs);
      const GkType r = type_expr(*b->rhs);
      const std::string op(to_string(b->op));
      if (is_logical(b->op)) {
        if (!l.is_bool() || !r.is_bool()) {
          fail(ErrorCode::TypeMismatch, loc, "'" + op + "' needs boolean operands");
        }
        return kBool;
      }
      if (b->op == BinaryOp::Eq || b->op == BinaryOp::Ne) {
        if (!comparable_eq(l, r)) {
          fail(ErrorCode::TypeMismatch, loc,
               "cannot compare " + l.to_string() + " with " + r.to_string());
        }
        return kBool;
      }
      if (is_comparison(b->op)) {
        if (!l.is_int() || !r.is_int()) {
          fail(ErrorCode::TypeMismatch, loc,
               "'" + op + "' needs integers, got " + l.to_string() + " and " + r.to_string());
        }
        return kBool;
      }
      if (!l.is_int() || !r.is_int()) {
        fail(ErrorCode::TypeMismatch, loc,
             "'" + op + "' needs integers, got " + l.to_string() + " and " + r.to_string());
      }
      return kWide;
    }
    if (auto* m = e.as<MapRef>()) {
      const MapDecl* decl = prog_.find_map(m->map);
      if (decl == nullptr) fail(ErrorCode::UnknownIdentifier, loc, "unknown map '" + m->map + "'");
      if (decl->keys.size() != m->keys.size()) {
        fail(ErrorCode::ArityMismatch, loc,
             m->map + " takes " + std::to_string(decl->keys.size()) + " key(s)");
      }
      for (std::size_t i = 0; i < m->keys.size(); ++i) {
        const GkType t = type_expr(m->keys[i]);
        if (!assignable(decl->keys[i].type, t)) {
          fail(ErrorCode::TypeMismatch, m->keys[i].loc,
               "key '" + decl->keys[i].name + "' of " + m->map + " must be " +
                   decl->keys[i].type.to_string());
        }
      }
      return GkType::record(m->map);
    }
    if (auto* f = e.as<FieldRef>()) {
      const GkType base = type_expr(*f->base);
      if (!base.is_record()) {
        fail(ErrorCode::TypeMismatch, loc, "field access on non-record " + base.to_string());
      }
      const Param* p = prog_.find_map(base.record_map())->find_field(f->field);
      if (p == nullptr) {
        fail(ErrorCode::UnknownField, loc,
             "map '" + base.record_map() + "' has no field '" + f->field + "'");
      }
      return p->type;
    }
    if (auto* ix = e.as<IndexRef>()) {
      const GkType base = type_expr(*ix->base);
      if (!type_expr(*ix->index).is_int()) fail(ErrorCode::TypeMismatch, loc, "index must be int");
      if (base.is_byte_array() || base.is_string()) return GkType::integer(IntKind::Char);
      if (base.is_array()) return base.element();
      fail(ErrorCode::TypeMismatch, loc, "cannot index " + base.to_string());
    }
    if (auto* sl = e.as<SliceRef>()) {
      const GkType base = type_expr(*sl->base);
      if (!type_expr(*sl->lo).is_int() || !type_expr(*sl->hi).is_int()) {
        fail(ErrorCode::TypeMismatch, loc, "slice bounds must be integers");
      }
      if (!base.is_array()) fail(ErrorCode::TypeMismatch, loc, "cannot slice " + base.to_string());
      return base;
    }
    if (auto* bc = e.as<BuiltinCall>()) {
      if (bc->args.size() != 1) fail(ErrorCode::ArityMismatch, loc, "len takes one argument");
      const GkType t = type_expr(bc->args[0]);
      if (!t.is_array() && !t.is_string()) {
        fail(ErrorCode::TypeMismatch, loc, "len needs an array or string");
      }
      return kWide;
    }
    if (auto* q = e.as<Quantifier>()) {
      const MapDecl* decl = prog_.find_map(q->map);
      if (decl == nullptr) fail(ErrorCode::UnknownIdentifier, loc, "unknown map '" + q->map + "'");
      if (decl->keys.size() != 1) {
        fail(ErrorCode::ArityMismatch, loc, "quantifiers range over single-key maps only");
      }
      quant_vars_.emplace_back(q->var, decl->keys[0].type);
      const GkType body = type_expr(*q->body);
      quant_vars_.pop_back();
      if (!body.is_bool()) fail(ErrorCode::TypeMismatch, loc, "quantifier body must be boolean");
      return kBool;
    }
    fail(ErrorCode::SyntaxError, loc, "extern call is only allowed as a statement or initializer");
  }

  TypedModelProgram& typed_;
  ModelProgram& prog_;
  ActionInfo* info_ = nullptr;
  ActionDecl* action_ = nullptr;
  std::set<std::string> visible_;
  std::vector<std::pair<std::string, GkType>> quant_vars_;
  std::vector<std::string> atomic_stack_;
  std::string output_name_;
  bool seen_untrusted_ = false;
  int untrusted_sites_ = 0;
};

}  // namespace

const ActionInfo& TypedModelProgram::action(std::string_view name) const {
  auto it = actions.find(name);
  if (it == actions.end()) {
    throw Error(ErrorCode::UnknownAction, "model '" + program.name + "' has no action '" +
                                              std::string(name) + "'");
  }
  return it->second;
}

TypecheckResult typecheck(const ModelProgram& program) {
  TypecheckResult result;
  auto typed = std::make_shared<TypedModelProgram>();
  typed->program = program;
  try {
    Checker(*typed).run();
    result.program = std::move(typed);
  } catch (const CheckFailure& f) {
    result.diagnostics.push_back(f.diag);
  }
  return result;
}

ProgramPtr compile(std::string_view source, std::string name) {
  auto parsed = parse(source, std::move(name));
  if (!parsed.ok()) {
    const auto& d = parsed.diagnostics.front();
    throw Error(d.code, d.to_string());
  }
  auto checked = typecheck(*parsed.program);
  if (!checked.ok()) {
    const auto& d = checked.diagnostics.front();
    throw Error(d.code, d.to_string());
  }
  return checked.program;
}

const std::map<std::string, WideInt, std::less<>>& builtin_constants() {
  static const std::map<std::string, WideInt, std::less<>> kConstants = {
      {"EPERM", 1},      {"ENOENT", 2},     {"EBADF", 9},      {"EAGAIN", 11},
      {"EACCES", 13},    {"EBUSY", 16},     {"EEXIST", 17},    {"ENOTDIR", 20},
      {"EISDIR", 21},    {"EINVAL", 22},    {"EDEADLK", 35},   {"O_RDONLY", 0},
      {"O_WRONLY", 1},   {"O_RDWR", 2},     {"O_ACCMODE", 3},  {"O_CREAT", 64},
      {"O_EXCL", 128},   {"O_TRUNC", 512},  {"O_APPEND", 1024}, {"SEEK_SET", 0},
      {"SEEK_CUR", 1},   {"SEEK_END", 2},   {"S_IFDIR", 16384}, {"S_IFREG", 32768},
      {"F_OK", 0},       {"X_OK", 1},       {"W_OK", 2},       {"R_OK", 4},
      {"MUTEX_NORMAL", 0}, {"MUTEX_ERRCHECK", 1}, {"MUTEX_RECURSIVE", 2},
  };
  return kConstants;
}

std::optional<WideInt> builtin_constant(std::string_view name) {
  const auto& c = builtin_constants();
  auto it = c.find(name);
  if (it == c.end()) return std::nullopt;
  return it->second;
}

}  // namespace gk

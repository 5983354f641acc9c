// Canonical source printer. Parenthesizes by precedence so that re-parsing
// yields a structurally identical tree.

#include <cstdio>
#include <string>

#include "gatekeeper/frontend.hpp"

namespace gk {

namespace {

// Precedence levels, loosest first; mirrors the parser's descent order.
enum Level : int {
  kQuant = 0,
  kImplies,
  kOr,
  kAnd,
  kNot,
  kCmp,
  kBitOr,
  kBitXor,
  kBitAnd,
  kShift,
  kAdd,
  kMul,
  kNeg,
  kPostfix,
};

int binary_level(BinaryOp op) {
  switch (op) {
    case BinaryOp::Implies: return kImplies;
    case BinaryOp::Or: return kOr;
    case BinaryOp::And: return kAnd;
    case BinaryOp::BitOr: return kBitOr;
    case BinaryOp::BitXor: return kBitXor;
    case BinaryOp::BitAnd: return kBitAnd;
    case BinaryOp::Shl:
    case BinaryOp::Shr: return kShift;
    case BinaryOp::Add:
    case BinaryOp::Sub: return kAdd;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod: return kMul;
    default: return kCmp;
  }
}

std::string escape_char(unsigned char c, char quote) {
  switch (c) {
    case '\n': return "\\n";
    case '\t': return "\\t";
    case '\r': return "\\r";
    case '\\': return "\\\\";
    default: break;
  }
  if (c == static_cast<unsigned char>(quote)) return std::string("\\") + quote;
  if (c < 0x20 || c >= 0x7f) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "\\x%02x", c);
    return buf;
  }
  return std::string(1, static_cast<char>(c));
}

class Printer {
 public:
  std::string expr(const Expr& e, int min_level = kQuant) {
    const int level = level_of(e);
    std::string body = render(e);
    if (level < min_level) return "(" + body + ")";
    return body;
  }

  void stmts(const std::vector<Stmt>& body, int indent, std::string& out) {
    for (const auto& s : body) stmt(s, indent, out);
  }

  void stmt(const Stmt& s, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    out += pad;
    if (const auto* d = s.as<LocalDecl>()) {
      out += d->name + ": " + print_type(d->type) + " := " + expr(d->init) + ";\n";
    } else if (const auto* a = s.as<Assign>()) {
      out += expr(a->target) + " := " + expr(a->value) + ";\n";
    } else if (const auto* r = s.as<Requires>()) {
      out += std::string(r->await ? "await requires (" : "requires (") + expr(r->cond) + ");\n";
    } else if (const auto* at = s.as<Atomic>()) {
      out += "atomic (" + expr(at->target) + ") {\n";
      stmts(at->body, indent + 1, out);
      out += pad + "}\n";
    } else if (const auto* i = s.as<If>()) {
      out += "if (" + expr(i->cond) + ") {\n";
      stmts(i->then_body, indent + 1, out);
      out += pad + "}";
      if (!i->else_body.empty()) {
        out += " else {\n";
        stmts(i->else_body, indent + 1, out);
        out += pad + "}";
      }
      out += "\n";
    } else if (const auto* b = s.as<Block>()) {
      out += "{\n";
      stmts(b->body, indent + 1, out);
      out += pad + "}\n";
    } else if (const auto* ret = s.as<Return>()) {
      out += ret->value ? "return " + expr(*ret->value) + ";\n" : "return;\n";
    } else if (const auto* c = s.as<CallStmt>()) {
      out += expr(c->call) + ";\n";
    } else if (const auto* del = s.as<Delete>()) {
      out += "delete " + expr(del->target) + ";\n";
    }
  }

 private:
  static int level_of(const Expr& e) {
    if (e.as<Quantifier>()) return kQuant;
    if (const auto* b = e.as<Binary>()) return binary_level(b->op);
    if (const auto* u = e.as<Unary>()) return u->op == UnaryOp::Not ? kNot : kNeg;
    if (const auto* i = e.as<IntLit>(); i && i->value < 0) return kNeg;
    if (e.as<ExternCall>()) return kQuant;
    return kPostfix;
  }

  std::string list(const std::vector<Expr>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += expr(items[i]);
    }
    return out;
  }

  std::string render(const Expr& e) {
    if (const auto* i = e.as<IntLit>()) return wide_to_string(i->value);
    if (const auto* s = e.as<StrLit>()) {
      std::string out = "\"";
      for (unsigned char c : s->value) out += escape_char(c, '"');
      return out + "\"";
    }
    if (const auto* c = e.as<CharLit>()) return "'" + escape_char(c->value, '\'') + "'";
    if (const auto* b = e.as<BoolLit>()) return b->value ? "true" : "false";
    if (e.as<NullLit>()) return "NULL";
    if (const auto* n = e.as<NameRef>()) return n->name;
    if (const auto* u = e.as<Unary>()) {
      if (u->op == UnaryOp::Not) return "not " + expr(*u->operand, kNot);
      return "-" + expr(*u->operand, kNeg);
    }
    if (const auto* b = e.as<Binary>()) {
      const int level = binary_level(b->op);
      const std::string op(to_string(b->op));
      if (b->op == BinaryOp::Implies) {
        return expr(*b->lhs, kImplies + 1) + " -> " + expr(*b->rhs, kImplies);
      }
      if (level == kCmp) {
        return expr(*b->lhs, kCmp + 1) + " " + op + " " + expr(*b->rhs, kCmp + 1);
      }
      return expr(*b->lhs, level) + " " + op + " " + expr(*b->rhs, level + 1);
    }
    if (const auto* m = e.as<MapRef>()) return m->map + "(" + list(m->keys) + ")";
    if (const auto* f = e.as<FieldRef>()) return expr(*f->base, kPostfix) + "." + f->field;
    if (const auto* ix = e.as<IndexRef>()) {
      return expr(*ix->base, kPostfix) + "[" + expr(*ix->index) + "]";
    }
    if (const auto* sl = e.as<SliceRef>()) {
      return expr(*sl->base, kPostfix) + "[" + expr(*sl->lo) + ":" + expr(*sl->hi) + "]";
    }
    if (const auto* bc = e.as<BuiltinCall>()) return bc->fn + "(" + list(bc->args) + ")";
    if (const auto* q = e.as<Quantifier>()) {
      return std::string(q->universal ? "forall " : "exists ") + q->var + " in " + q->map +
             " :: " + expr(*q->body);
    }
    if (const auto* x = e.as<ExternCall>()) return "extern call " + x->fn + "(" + list(x->args) + ")";
    return "?";
  }
};

std::string params(const std::vector<Param>& ps) {
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ", ";
    out += ps[i].name + ": " + print_type(ps[i].type);
  }
  return out;
}

}  // namespace

std::string print_type(const GkType& type) { return type.to_string(); }

std::string print_expr(const Expr& expr) { return Printer{}.expr(expr); }

std::string pretty_print(const ModelProgram& program) {
  Printer p;
  std::string out;
  for (const auto& m : program.maps) {
    out += "Map " + m.name + "(" + params(m.keys) + ") returns (" + params(m.fields) + ");\n";
  }
  if (!program.init.empty()) {
    if (!out.empty()) out += "\n";
    out += "init {\n";
    for (const auto& ia : program.init) {
      out += "  " + p.expr(ia.target) + " := " + p.expr(ia.value) + ";\n";
    }
    out += "}\n";
  }
  for (const auto& a : program.actions) {
    if (!out.empty()) out += "\n";
    out += "action " + a.name + "(" + params(a.params) + ") returns (" + a.result.name + ": " +
           print_type(a.result.type) + ") := {\n";
    p.stmts(a.body, 1, out);
    if (a.hints) out += "  fuzz { requires (" + p.expr(*a.hints) + "); }\n";
    out += "}\n";
  }
  return out;
}

}  // namespace gk

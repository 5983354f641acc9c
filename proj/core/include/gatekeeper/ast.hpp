#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gatekeeper/value.hpp"

namespace gk {

/// Owning pointer with value semantics: copies deep, compares deep.
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : p_(std::make_unique<T>(std::move(value))) {}  // NOLINT
  Box(const Box& other) : p_(other.p_ ? std::make_unique<T>(*other.p_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) p_ = other.p_ ? std::make_unique<T>(*other.p_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  explicit operator bool() const { return p_ != nullptr; }
  T& operator*() { return *p_; }
  const T& operator*() const { return *p_; }
  T* operator->() { return p_.get(); }
  const T* operator->() const { return p_.get(); }
  const T* get() const { return p_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.p_ || !b.p_) return !a.p_ && !b.p_;
    return *a.p_ == *b.p_;
  }

 private:
  std::unique_ptr<T> p_;
};

struct SourceLoc {
  int line = 0;
  int column = 0;
};

struct Expr;
struct Stmt;

enum class UnaryOp { Not, Neg };

enum class BinaryOp {
  Implies,
  Or,
  And,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  BitOr,
  BitXor,
  BitAnd,
  Shl,
  Shr,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
};

std::string_view to_string(BinaryOp op);
bool is_comparison(BinaryOp op);
bool is_logical(BinaryOp op);

struct IntLit {
  WideInt value = 0;
  bool operator==(const IntLit&) const = default;
};

struct StrLit {
  std::string value;
  bool operator==(const StrLit&) const = default;
};

struct CharLit {
  std::uint8_t value = 0;
  bool operator==(const CharLit&) const = default;
};

struct BoolLit {
  bool value = false;
  bool operator==(const BoolLit&) const = default;
};

struct NullLit {
  bool operator==(const NullLit&) const = default;
};

enum class NameKind : std::uint8_t { Unresolved, Variable, Constant, QuantVar };

struct NameRef {
  std::string name;
  // Resolution annotations (filled by typecheck, ignored by equality).
  NameKind kind = NameKind::Unresolved;
  WideInt constant = 0;

  friend bool operator==(const NameRef& a, const NameRef& b) { return a.name == b.name; }
};

struct Unary {
  UnaryOp op;
  Box<Expr> operand;
  bool operator==(const Unary&) const = default;
};

struct Binary {
  BinaryOp op;
  Box<Expr> lhs;
  Box<Expr> rhs;
  bool operator==(const Binary&) const = default;
};

/// `m(k1, k2)`: the entry record of map m, or NULL.
struct MapRef {
  std::string map;
  std::vector<Expr> keys;
  bool operator==(const MapRef&) const;
};

struct FieldRef {
  Box<Expr> base;
  std::string field;
  bool operator==(const FieldRef&) const = default;
};

struct IndexRef {
  Box<Expr> base;
  Box<Expr> index;
  bool operator==(const IndexRef&) const = default;
};

/// Half-open slice `base[lo:hi]`.
struct SliceRef {
  Box<Expr> base;
  Box<Expr> lo;
  Box<Expr> hi;
  bool operator==(const SliceRef&) const = default;
};

/// Builtin function application (currently only `len`).
struct BuiltinCall {
  std::string fn;
  std::vector<Expr> args;
  bool operator==(const BuiltinCall&) const;
};

/// `forall k in m :: body` / `exists k in m :: body` over a single-key map.
struct Quantifier {
  bool universal = true;
  std::string var;
  std::string map;
  Box<Expr> body;
  bool operator==(const Quantifier&) const = default;
};

struct ExternCall {
  std::string fn;
  std::vector<Expr> args;
  bool operator==(const ExternCall&) const;
};

struct Expr {
  using Node = std::variant<IntLit, StrLit, CharLit, BoolLit, NullLit, NameRef, Unary,
                            Binary, MapRef, FieldRef, IndexRef, SliceRef, BuiltinCall,
                            Quantifier, ExternCall>;
  Node node;
  SourceLoc loc;
  GkType type;  // annotation

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  T* as() {
    return std::get_if<T>(&node);
  }

  friend bool operator==(const Expr& a, const Expr& b) { return a.node == b.node; }
};

inline bool MapRef::operator==(const MapRef& o) const { return map == o.map && keys == o.keys; }
inline bool BuiltinCall::operator==(const BuiltinCall& o) const {
  return fn == o.fn && args == o.args;
}
inline bool ExternCall::operator==(const ExternCall& o) const {
  return fn == o.fn && args == o.args;
}

Expr make_expr(Expr::Node node, SourceLoc loc = {});

// ------------------------------------------------------------- statements

struct LocalDecl {
  std::string name;
  GkType type;
  Expr init;
  bool operator==(const LocalDecl&) const = default;
};

struct Assign {
  Expr target;
  Expr value;
  bool operator==(const Assign&) const = default;
};

struct Requires {
  Expr cond;
  bool await = false;
  bool operator==(const Requires&) const = default;
};

struct Atomic {
  Expr target;  // a MapRef designating the locked map
  std::vector<Stmt> body;
  bool operator==(const Atomic&) const;
};

/// Branches are always blocks; a single-statement branch is wrapped by the
/// parser, so printing and re-parsing is structure-preserving.
struct If {
  Expr cond;
  std::vector<Stmt> then_body;
  std::vector<Stmt> else_body;
  bool operator==(const If&) const;
};

struct Block {
  std::vector<Stmt> body;
  bool operator==(const Block&) const;
};

struct Return {
  std::optional<Expr> value;
  bool operator==(const Return&) const = default;
};

/// Bare `extern call f(args);` whose result is discarded.
struct CallStmt {
  Expr call;
  bool operator==(const CallStmt&) const = default;
};

struct Delete {
  Expr target;  // a MapRef
  bool operator==(const Delete&) const = default;
};

struct Stmt {
  using Node =
      std::variant<LocalDecl, Assign, Requires, Atomic, If, Block, Return, CallStmt, Delete>;
  Node node;
  SourceLoc loc;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }

  friend bool operator==(const Stmt& a, const Stmt& b) { return a.node == b.node; }
};

inline bool Atomic::operator==(const Atomic& o) const {
  return target == o.target && body == o.body;
}
inline bool Block::operator==(const Block& o) const { return body == o.body; }
inline bool If::operator==(const If& o) const {
  return cond == o.cond && then_body == o.then_body && else_body == o.else_body;
}

// ----------------------------------------------------------- declarations

struct Param {
  std::string name;
  GkType type;
  bool operator==(const Param&) const = default;
};

struct MapDecl {
  std::string name;
  std::vector<Param> keys;
  std::vector<Param> fields;
  SourceLoc loc;

  const Param* find_field(std::string_view field) const;
  std::optional<std::size_t> field_index(std::string_view field) const;

  friend bool operator==(const MapDecl& a, const MapDecl& b) {
    return a.name == b.name && a.keys == b.keys && a.fields == b.fields;
  }
};

struct ActionDecl {
  std::string name;
  std::vector<Param> params;
  Param result;
  std::vector<Stmt> body;
  std::optional<Expr> hints;  // from a `fuzz { requires (...); }` block
  SourceLoc loc;

  friend bool operator==(const ActionDecl& a, const ActionDecl& b) {
    return a.name == b.name && a.params == b.params && a.result == b.result &&
           a.body == b.body && a.hints == b.hints;
  }
};

struct InitAssignment {
  Expr target;
  Expr value;
  SourceLoc loc;

  friend bool operator==(const InitAssignment& a, const InitAssignment& b) {
    return a.target == b.target && a.value == b.value;
  }
};

struct ModelProgram {
  std::string name;
  std::vector<MapDecl> maps;
  std::vector<ActionDecl> actions;
  std::vector<InitAssignment> init;

  const MapDecl* find_map(std::string_view map) const;
  const ActionDecl* find_action(std::string_view action) const;

  /// Structural equality; the program name is not part of the structure.
  friend bool operator==(const ModelProgram& a, const ModelProgram& b) {
    return a.maps == b.maps && a.actions == b.actions && a.init == b.init;
  }
};

}  // namespace gk

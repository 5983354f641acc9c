#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/ast.hpp"
#include "gatekeeper/error.hpp"

namespace gk {

struct Diagnostic {
  ErrorCode code;
  SourceLoc loc;
  std::string message;

  /// "line:col: Code: message"
  std::string to_string() const;
};

struct ParseResult {
  std::optional<ModelProgram> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value() && diagnostics.empty(); }
};

ParseResult parse(std::string_view source, std::string name = "model");

/// Per-action facts derived during type checking.
struct ActionInfo {
  const ActionDecl* decl = nullptr;
  /// The single untrusted extern call site, if the action has one.
  const Stmt* untrusted_call = nullptr;
  std::string untrusted_fn;
  /// Every variable visible in the body (params, result, locals) with its type.
  std::map<std::string, GkType> variables;
  /// True when the untrusted call's arguments are exactly the action
  /// parameters, in order; required to serve the action as a service.
  bool call_mirrors_params = false;
  bool has_await = false;
  /// True when some state write happens outside an `atomic` block.
  bool writes_outside_atomic = false;
};

/// A ModelProgram that passed type checking, with every expression
/// annotated. Holds internal pointers into `program`, hence move-only.
struct TypedModelProgram {
  ModelProgram program;
  std::map<std::string, ActionInfo, std::less<>> actions;
  /// Sessions may be driven by several threads only when every state write
  /// of every action happens inside an `atomic` block.
  bool thread_safe = false;

  TypedModelProgram() = default;
  TypedModelProgram(const TypedModelProgram&) = delete;
  TypedModelProgram& operator=(const TypedModelProgram&) = delete;
  TypedModelProgram(TypedModelProgram&&) = default;
  TypedModelProgram& operator=(TypedModelProgram&&) = default;

  const ActionInfo& action(std::string_view name) const;
  const std::string& name() const { return program.name; }
};

using ProgramPtr = std::shared_ptr<const TypedModelProgram>;

struct TypecheckResult {
  std::shared_ptr<TypedModelProgram> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program != nullptr && diagnostics.empty(); }
};

TypecheckResult typecheck(const ModelProgram& program);

/// Parse + typecheck; throws Error carrying the first diagnostic.
ProgramPtr compile(std::string_view source, std::string name = "model");

/// Canonical source text; re-parses to a structurally identical program.
std::string pretty_print(const ModelProgram& program);
std::string print_expr(const Expr& expr);
std::string print_type(const GkType& type);

/// Named integer constants available to every model (errno values, open
/// flags, seek whence, mode bits, mutex kinds).
std::optional<WideInt> builtin_constant(std::string_view name);
const std::map<std::string, WideInt, std::less<>>& builtin_constants();

}  // namespace gk

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/ast.hpp"
#include "gatekeeper/frontend.hpp"
#include "gatekeeper/state.hpp"
#include "gatekeeper/value.hpp"

namespace gk {

using Bindings = std::map<std::string, Value, std::less<>>;

/// Longest array any slice or solver-synthesized buffer may have.
inline constexpr std::size_t kMaxArrayLength = std::size_t{1} << 20;

/// Evaluates expressions against a state view and variable bindings.
/// Slices and indices of map-entry fields read past the end as zeros;
/// of variables, they raise OutOfBounds.
class Evaluator {
 public:
  Evaluator(const StateStore& state, const Bindings& vars, const Bindings* overlay = nullptr)
      : state_(state), vars_(vars), overlay_(overlay) {}

  Value eval(const Expr& e);
  bool eval_bool(const Expr& e) { return eval(e).as_bool(); }

 private:
  const Value* lookup(std::string_view name) const;
  Value eval_binary(const Binary& b);
  Value eval_access(const Expr& base, bool& sparse);

  const StateStore& state_;
  const Bindings& vars_;
  const Bindings* overlay_;
  std::vector<std::pair<std::string, Value>> quant_;
};

/// Strict evaluation; runtime faults propagate as Error.
bool evaluate(const Expr& c, const StateStore& state, const Bindings& bindings);

/// True for the error codes a failed assertion absorbs (null dereference,
/// out-of-bounds access, range errors).
bool is_evaluation_fault(ErrorCode code);

/// Assertion semantics: evaluation faults count as false.
bool holds(const Expr& c, const StateStore& state, const Bindings& bindings,
           const Bindings* overlay = nullptr);

/// A `requires` reachable on some path, with the branch conditions leading to it.
struct ScopedConstraint {
  Expr constraint;                   // locals defined on the path are substituted
  std::vector<Expr> path_condition;  // conjuncts; empty means unconditional
  bool await = false;
  std::string atomic_map;            // innermost enclosing atomic block, if any
  std::string source;                // the requires text as written

  /// `pc -> constraint`, or the constraint itself when unconditional.
  Expr guarded() const;
};

/// Scoped constraints of `action`, walking every path from just after `site`
/// (or from the start when `site` is null) to the end of the body.
std::vector<ScopedConstraint> collect_scoped_constraints(const ActionInfo& action,
                                                         const Stmt* site = nullptr);

/// Names of every variable an expression refers to.
std::vector<std::string> free_variables(const Expr& e);

Expr conjunction(const std::vector<Expr>& parts);
Expr negation(const Expr& e);

// ------------------------------------------------------------------ solving

enum class SolveMode { Satisfy, Violate };

struct Unknown {
  std::string name;
  GkType type;
  /// Integer domain bounds (inclusive); ignored for arrays.
  WideInt lo = 0;
  WideInt hi = 0;
  /// Arrays: starting contents; its length is the capacity.
  Value initial;
};

/// Integer unknowns get [-2^31, 2^31) intersected with the type's range.
Unknown make_unknown(std::string name, const GkType& type, Value initial = Value::null());

struct SolveRequest {
  std::vector<Expr> constraints;
  std::vector<Unknown> unknowns;
  Bindings bindings;
  const StateStore* state = nullptr;
  std::uint64_t seed = 0;
  SolveMode mode = SolveMode::Satisfy;
  std::optional<Expr> hints;
  std::size_t max_solutions = 1;
};

struct SolveResult {
  enum class Status { Solutions, Unsat, DomainExhausted };
  Status status = Status::Unsat;
  /// Assignments to the unknowns. DomainExhausted keeps the partial list.
  std::vector<Bindings> solutions;

  bool ok() const { return status == Status::Solutions; }
};

/// Pluggable solving backend.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual SolveResult solve(const SolveRequest& req) = 0;
  virtual SolveResult solve_violations(const SolveRequest& req) = 0;
};

/// The built-in bounded-domain solver: linear segmentation of integer
/// domains, enumeration or sampling of non-linear segments, and structural
/// synthesis of arrays from slice equalities.
class BoundedSolver : public Solver {
 public:
  SolveResult solve(const SolveRequest& req) override;
  SolveResult solve_violations(const SolveRequest& req) override;
};

SolveResult solve(const SolveRequest& req);
SolveResult solve_violations(const SolveRequest& req);

}  // namespace gk

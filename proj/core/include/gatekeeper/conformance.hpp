#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gatekeeper/engine.hpp"
#include "gatekeeper/frontend.hpp"
#include "gatekeeper/service.hpp"

namespace gk {

class TraceWriter;

// ------------------------------------------------------------------ scripts

/// A script argument before resolution against earlier results.
struct ScriptArg {
  struct Var {
    std::string name;
  };
  struct Buf {
    std::size_t size = 0;  // zero-filled
  };
  std::variant<WideInt, std::string, Var, Buf, std::vector<std::uint8_t>> value;
};

/// Return predicate: `op rhs`, or Any. The rhs is a literal, a builtin
/// constant (optionally negated), or `$name` for a bound result.
struct Expectation {
  enum class Op { Any, Eq, Ne, Lt, Le, Gt, Ge };
  Op op = Op::Any;
  bool negate = false;
  std::string operand;  // decimal/hex literal, constant name or $var
  std::string text;     // as written

  static Expectation parse(std::string_view text);
};

struct ScriptStep {
  std::string action;
  std::vector<ScriptArg> args;
  Expectation expect;
  /// Compared with the leading bytes of the first byte-array argument.
  std::optional<std::vector<std::uint8_t>> expect_buf;
  /// Stores the return value under this name for later `{"var": ...}` args.
  std::optional<std::string> bind;
};

struct TestScript {
  std::string name;
  std::vector<ScriptStep> steps;
  unsigned seeds = 1;
  /// Step an adversarial variant is expected to be caught at.
  std::optional<std::size_t> attack_step;
  /// Adversary the script targets (attack scripts only).
  std::optional<std::string> variant;
  std::filesystem::path source;
};

/// Parses one script document (ScriptParseError with the offending field).
TestScript parse_script(std::string_view json_text, std::string fallback_name = "script");
TestScript load_script(const std::filesystem::path& file);
/// Every *.json file of `dir`, sorted by file name.
std::vector<TestScript> load_suite(const std::filesystem::path& dir);
/// A file or a directory of scripts.
std::vector<TestScript> load_scripts(const std::filesystem::path& path);

/// Byte pattern syntax: hex digits, or `repeat(0xHH,N)` terms joined by `+`.
std::vector<std::uint8_t> parse_byte_pattern(std::string_view text);

/// Checks that every step names an action of `program` (ScriptParseError).
void check_script(const TestScript& script, const TypedModelProgram& program);

// ----------------------------------------------------------------- backends

enum class BackendKind { ValidatorCorrect, ValidatorAdversary, Mock, ValidatorOnMock };

std::string_view to_string(BackendKind kind);

struct BackendSpec {
  BackendKind kind = BackendKind::ValidatorCorrect;
  std::string variant;  // ValidatorAdversary only
  std::uint64_t seed = 0;
  /// Receives the validator's trace; called once per script run.
  std::function<std::shared_ptr<TraceWriter>(const TestScript&, std::uint64_t seed)> trace;
};

/// The correct simulated service for a bundled model name ("fs", "sync");
/// ServiceUnavailable for other models.
ServiceBinding correct_service(std::string_view model_name);

/// A fresh session in its init state.
std::unique_ptr<ActionBackend> make_backend(ProgramPtr program, const BackendSpec& spec,
                                            std::uint64_t seed,
                                            std::shared_ptr<TraceWriter> trace = nullptr);

// ------------------------------------------------------------------ running

enum class FailReason { ExpectationFailed, Violation, ModelUnsat, ModelError };
enum class Classification { None, OverRestrictive, OverPermissive };

std::string_view to_string(FailReason reason);
std::string_view to_string(Classification c);

struct StepResult {
  std::size_t index = 0;
  Verdict verdict;
};

struct ScriptResult {
  std::string name;
  std::uint64_t seed = 0;
  bool pass = true;
  std::size_t failed_step = 0;
  FailReason reason = FailReason::ExpectationFailed;
  std::string detail;
  Classification classification = Classification::None;
  std::vector<StepResult> steps;
};

struct SuiteReport {
  BackendKind backend = BackendKind::ValidatorCorrect;
  std::string variant;
  std::vector<ScriptResult> results;

  std::size_t passed() const;
  std::size_t failed() const { return results.size() - passed(); }
  bool all_passed() const { return failed() == 0; }
  /// Deterministic JSON document.
  std::string to_json() const;
};

/// Runs one script on `backend` (already in its init state).
ScriptResult run_script(const TestScript& script, ActionBackend& backend, BackendKind kind,
                        std::uint64_t seed = 0);

/// Runs every script from a fresh backend. Mock backends run each script
/// under `seeds` consecutive seeds starting at spec.seed (the script's own
/// count when `seeds` is 0); validator backends run once.
SuiteReport run_suite(const std::vector<TestScript>& scripts, ProgramPtr program,
                      const BackendSpec& spec, unsigned seeds = 0);

/// Resolves script arguments against bound results (ScenarioError for
/// unbound variables).
std::vector<Value> resolve_args(const ScriptStep& step, const Bindings& bound);

/// Evaluates a step's expectation; returns an explanation when it fails.
std::optional<std::string> check_step(const ScriptStep& step, const Verdict& verdict,
                                      const ActionInfo& info, const Bindings& bound);

}  // namespace gk

#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/conformance.hpp"
#include "gatekeeper/constraint.hpp"
#include "gatekeeper/service.hpp"
#include "gatekeeper/state.hpp"

namespace gk {

inline constexpr std::size_t kDefaultFuzzBudget = 20;

enum class InjectionMode { Raw, Shielded };
enum class InjectionOutcome { Clean, TargetFault, ValidatorCaught };

std::string_view to_string(InjectionMode mode);
std::string_view to_string(InjectionOutcome outcome);

struct FuzzPlan {
  ProgramPtr program;
  /// Actions whose calls are injected; empty means every action.
  std::vector<std::string> actions;
  /// Malicious assignments per injection point (0 yields an empty report).
  std::size_t budget = kDefaultFuzzBudget;
  std::uint64_t seed = 0;
  bool hints = true;
  /// Worker threads for the re-runs; results do not depend on it.
  unsigned jobs = 1;
};

/// Raised by in-process targets when a guard or internal assertion trips.
class TargetFault : public std::runtime_error {
 public:
  TargetFault(std::string signature, const std::string& detail)
      : std::runtime_error(signature + ": " + detail), signature_(std::move(signature)) {}
  const std::string& signature() const { return signature_; }

 private:
  std::string signature_;
};

/// Trusted code that consumes raw service results, driven by a scenario.
/// Must make exactly one service call per scenario step.
class FuzzTarget {
 public:
  virtual ~FuzzTarget() = default;
  virtual std::string name() const = 0;
  /// Runs the whole scenario; throws TargetFault when it misbehaves.
  virtual void run(const TestScript& scenario, ServiceBinding& service) = 0;
};

/// Where an untrusted call happens in the clean scenario run.
struct InjectionPoint {
  std::size_t step = 0;
  std::string action;
  std::vector<Value> args;
  std::uint64_t call_index = 0;
  StateSnapshot state;  // model state before the step
};

struct InjectionRecord {
  std::size_t point = 0;
  std::string action;
  std::uint64_t seq = 0;  // scenario step of the injection
  Bindings injected;
  InjectionOutcome outcome = InjectionOutcome::Clean;
  std::string signature;  // fault signature or caught constraint
  /// Oracle re-check: a validator fed exactly `injected` reports a violation.
  bool model_violation = false;
};

struct FuzzCampaignReport {
  InjectionMode mode = InjectionMode::Shielded;
  std::string target;
  std::vector<InjectionPoint> points;
  std::vector<InjectionRecord> injections;
  /// Sorted, distinct signatures of TARGET_FAULT records.
  std::vector<std::string> fault_signatures;

  std::size_t total() const { return injections.size(); }
  std::size_t count(InjectionOutcome outcome) const;
  std::string to_json() const;
};

/// Up to `budget` pairwise-distinct assignments to the outputs of
/// `action`'s untrusted call (result and solved buffers) that violate the
/// constraints reachable from that call in `state`. Hint-satisfying values
/// come first. Throws DomainExhausted when fewer exist, unless
/// `allow_partial`; PreconditionFailed when `args` never reach the call.
std::vector<Bindings> generate_malicious(const TypedModelProgram& program, const StateSnapshot& state,
                                         std::string_view action, const std::vector<Value>& args,
                                         std::size_t budget, std::uint64_t seed, bool hints,
                                         bool allow_partial = false);

/// Rewrites a service call's outputs with an assignment produced by
/// generate_malicious for `action`.
void apply_assignment(const ActionInfo& info, const Bindings& assignment, std::vector<Value>& args, Value& ret);

/// Duality oracle: runs `action` from `state` on a validator whose service
/// returns exactly `assignment`; true when the validator reports a violation.
bool validator_rejects(ProgramPtr program, const StateSnapshot& state, std::string_view action,
                       const std::vector<Value>& args, const Bindings& assignment);

/// Runs `scenario` cleanly to find injection points, then re-runs it once per
/// (point, malicious assignment). SHIELDED routes results through a
/// validator on the correct service; RAW feeds them to `target`.
/// ScenarioError when the clean run fails or RAW has no target.
FuzzCampaignReport run_campaign(const FuzzPlan& plan, const TestScript& scenario, InjectionMode mode,
                                FuzzTarget* target = nullptr);

/// Deliberately fragile FS client for RAW campaigns: a 1024-slot shadow
/// table indexed by returned descriptors, guarded against out-of-bounds
/// use, plus per-path size tags. It trusts that a successful open never
/// returns a live descriptor and asserts when it does.
std::unique_ptr<FuzzTarget> make_shadow_tag_fs();

}  // namespace gk

#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string_view>
#include <vector>

#include "gatekeeper/constraint.hpp"
#include "gatekeeper/engine.hpp"
#include "gatekeeper/service.hpp"

namespace gk {

struct MockOptions {
  std::uint64_t seed = 0;
  /// Defaults to the built-in BoundedSolver.
  std::shared_ptr<Solver> solver;
  /// Try `result >= 0` first and fall back to any permitted result.
  bool prefer_success = true;
  std::vector<StateWrite> init_overrides;
};

/// Executes actions with no service behind them: the untrusted call's
/// outputs are solved from the constraints reachable after it. Pre-call
/// returns are taken directly; a failing pre-call requires raises
/// PreconditionFailed, and an unsatisfiable call site ModelUnsat.
/// `await requires` blocks until another thread's writes make it true.
class MockSession : public ActionBackend {
 public:
  explicit MockSession(ProgramPtr program, MockOptions options = {});

  /// Engine errors become ModelError verdicts.
  Verdict invoke(std::string_view action, std::vector<Value> args) override;

  /// Returns the action's result; solved buffers are written back into `args`.
  Value mock_invoke(std::string_view action, std::vector<Value>& args);

  const TypedModelProgram& program() const override { return *program_; }
  StateStore& state() override { return state_; }
  std::uint64_t seed() const { return options_.seed; }

 private:
  const std::vector<ScopedConstraint>& site_constraints(const ActionInfo& info);

  ProgramPtr program_;
  MockOptions options_;
  StateStore state_;
  std::atomic<std::uint64_t> seq_{0};
  std::atomic<int> in_flight_{0};
  std::mutex cache_mu_;
  std::map<const Stmt*, std::vector<ScopedConstraint>> cache_;
};

/// Serves each untrusted extern by running the matching action on `mock`,
/// so a validator can be bound to the mock.
ServiceBinding mock_binding(std::shared_ptr<MockSession> mock);

}  // namespace gk

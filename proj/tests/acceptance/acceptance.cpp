// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Thresholds are pinned below.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gatekeeper/conformance.hpp"
#include "gatekeeper/constraint.hpp"
#include "gatekeeper/engine.hpp"
#include "gatekeeper/error.hpp"
#include "gatekeeper/frontend.hpp"
#include "gatekeeper/fuzz.hpp"
#include "gatekeeper/mock.hpp"
#include "gatekeeper/models.hpp"
#include "gatekeeper/service.hpp"
#include "gatekeeper/state.hpp"
#include "gatekeeper/trace.hpp"
#include "gatekeeper/validator.hpp"
#include "mutations.hpp"
#include "random_constraints.hpp"

namespace gk {
namespace {

constexpr double kSuiteSecondsMax = 10.0;
constexpr unsigned kMockSeeds = 10;
constexpr std::size_t kShieldedBudget = 20;
constexpr std::size_t kRawBudget = 10;
constexpr int kThreads = 8;
constexpr int kLockPairs = 10000;
constexpr double kStressSecondsMax = 30.0;
constexpr int kSolverCases = 1000;
constexpr long long kSolverDomainMax = 1 << 12;

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string src(const std::string& rel) { return std::string(GK_SOURCE_DIR) + "/" + rel; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

std::string first_failure(const SuiteReport& rep) {
  for (const auto& r : rep.results) {
    if (!r.pass) return r.name + " step " + std::to_string(r.failed_step) + ": " + r.detail;
  }
  return "";
}

Outcome correct_services_pass() {
  const auto t0 = Clock::now();
  std::size_t total = 0;
  for (const char* model : {"fs", "sync"}) {
    SuiteReport rep = run_suite(load_suite(src(std::string("suites/") + model)), load_bundled(model), BackendSpec{});
    total += rep.results.size();
    if (!rep.all_passed()) return {false, std::string(model) + ": " + first_failure(rep)};
  }
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << total << " scripts in " << s << " s";
  return {s < kSuiteSecondsMax, d.str()};
}

Outcome mock_passes_suites() {
  std::size_t total = 0;
  for (const char* model : {"fs", "sync"}) {
    BackendSpec spec;
    spec.kind = BackendKind::Mock;
    SuiteReport rep =
        run_suite(load_suite(src(std::string("suites/") + model)), load_bundled(model), spec, kMockSeeds);
    total += rep.results.size();
    if (!rep.all_passed()) return {false, std::string(model) + ": " + first_failure(rep)};
  }
  return {true, std::to_string(total) + " script runs over " + std::to_string(kMockSeeds) + " seeds"};
}

Outcome attacks_caught() {
  const auto scripts = load_suite(src("suites/attacks"));
  const auto& catalog = adversary_catalog();
  std::size_t caught = 0;
  for (const auto& s : scripts) {
    const auto it = std::find_if(catalog.begin(), catalog.end(),
                                 [&](const AdversaryVariant& v) { return s.variant && v.id == *s.variant; });
    if (it == catalog.end() || !s.attack_step) return {false, s.name + ": no catalog variant"};
    BackendSpec spec;
    spec.kind = BackendKind::ValidatorAdversary;
    spec.variant = it->id;
    const ScriptResult r = run_suite({s}, load_bundled(it->model), spec).results.at(0);
    if (r.pass || r.reason != FailReason::Violation || r.failed_step != *s.attack_step) {
      return {false, s.name + ": " + (r.pass ? "passed" : std::string(to_string(r.reason))) + " at step " +
                         std::to_string(r.failed_step)};
    }
    ++caught;
  }
  return {caught == catalog.size() && caught == scripts.size(),
          std::to_string(caught) + "/" + std::to_string(catalog.size()) + " variants"};
}

Outcome shielded_campaign() {
  FuzzPlan plan;
  plan.program = load_bundled("fs");
  plan.budget = kShieldedBudget;
  const auto rep = run_campaign(plan, load_script(src("suites/scenarios/001_fs_workload.json")),
                                InjectionMode::Shielded);
  const bool all_violate = std::all_of(rep.injections.begin(), rep.injections.end(),
                                       [](const InjectionRecord& r) { return r.model_violation; });
  const std::size_t caught = rep.count(InjectionOutcome::ValidatorCaught);
  return {rep.total() > 0 && caught == rep.total() && all_violate,
          std::to_string(caught) + "/" + std::to_string(rep.total()) + " caught"};
}

Outcome raw_campaign() {
  FuzzPlan plan;
  plan.program = load_bundled("fs");
  plan.budget = kRawBudget;
  auto target = make_shadow_tag_fs();
  const auto rep = run_campaign(plan, load_script(src("suites/scenarios/002_fs_reopen_verify.json")),
                                InjectionMode::Raw, target.get());
  std::size_t aliasing = 0;
  for (const auto& r : rep.injections) {
    if (r.outcome != InjectionOutcome::TargetFault || r.action != "open") continue;
    const auto fd = r.injected.find("fd");
    if (fd == r.injected.end()) continue;
    const auto& maps = rep.points.at(r.point).state.maps;
    const auto table = maps.find("fd_state");
    if (table == maps.end()) continue;
    for (const auto& [_, entry] : table->second) {
      if (!entry.key.empty() && entry.key[0] == fd->second) {
        ++aliasing;
        break;
      }
    }
  }
  return {aliasing > 0, std::to_string(rep.count(InjectionOutcome::TargetFault)) + " faults, " +
                            std::to_string(aliasing) + " from an aliased open fd"};
}

bool caught_at_attack_step(const ProgramPtr& p, const std::string& file, const std::string& variant) {
  const TestScript attack = load_script(src(file));
  BackendSpec spec;
  spec.kind = BackendKind::ValidatorAdversary;
  spec.variant = variant;
  const ScriptResult r = run_suite({attack}, p, spec).results.at(0);
  return !r.pass && r.reason == FailReason::Violation && r.failed_step == *attack.attack_step;
}

Outcome mutants_detected() {
  const auto& muts = test::fs_mutations();
  const auto suite = load_suite(src("suites/fs"));

  const SuiteReport strict = run_suite(suite, test::mutate_fs(muts[0]), BackendSpec{});
  const bool strict_ok = !strict.all_passed() &&
                         std::all_of(strict.results.begin(), strict.results.end(), [](const ScriptResult& r) {
                           return r.pass || r.classification == Classification::OverRestrictive;
                         });

  BackendSpec mock;
  mock.kind = BackendKind::Mock;
  const SuiteReport loose = run_suite(suite, test::mutate_fs(muts[1]), mock, kMockSeeds);
  const bool loose_ok = std::any_of(loose.results.begin(), loose.results.end(), [](const ScriptResult& r) {
    return !r.pass && r.name == "read_more_than_size" && r.classification == Classification::OverPermissive;
  });

  // Removing the fresh-descriptor check must let the fd attack through,
  // while the intact model still catches it.
  const bool fd_ok = !caught_at_attack_step(test::mutate_fs(muts[2]), "suites/attacks/001_fd_confusion.json",
                                            "FD_CONFUSION") &&
                     caught_at_attack_step(load_bundled("fs"), "suites/attacks/001_fd_confusion.json",
                                           "FD_CONFUSION");

  std::ostringstream d;
  d << muts[0].id << "=" << (strict_ok ? "detected" : "missed") << " " << muts[1].id << "="
    << (loose_ok ? "detected" : "missed") << " " << muts[2].id << "=" << (fd_ok ? "detected" : "missed");
  return {strict_ok && loose_ok && fd_ok, d.str()};
}

// Each thread takes and releases the same NORMAL mutex; a shadow counter
// records whether two threads ever held it at once.
std::string stress(ActionBackend& backend) {
  if (!backend.invoke("mutex_init", {Value::wide(1), Value::wide(*builtin_constant("MUTEX_NORMAL"))}).ok()) {
    return "init failed";
  }
  std::atomic<int> holders{0};
  std::atomic<bool> overlap{false};
  std::atomic<long> bad{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < kLockPairs; ++i) {
        if (!backend.invoke("mutex_lock", {Value::wide(1), Value::wide(t)}).ok()) ++bad;
        if (holders.fetch_add(1) != 0) overlap = true;
        holders.fetch_sub(1);
        if (!backend.invoke("mutex_unlock", {Value::wide(1), Value::wide(t)}).ok()) ++bad;
      }
    });
  }
  for (auto& th : threads) th.join();
  if (overlap) return "overlapping holders";
  if (bad) return std::to_string(bad.load()) + " failed calls";
  return "";
}

Outcome lock_stress() {
  const auto t0 = Clock::now();
  const auto p = load_bundled("sync");
  MockSession mock(p);
  if (auto e = stress(mock); !e.empty()) return {false, "mock: " + e};
  ValidatorSession validator(p, correct_service("sync"));
  if (auto e = stress(validator); !e.empty()) return {false, "validator: " + e};
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << 2 * kThreads * kLockPairs << " lock/unlock pairs in " << s << " s";
  return {s < kStressSecondsMax, d.str()};
}

Outcome solver_vs_enumeration() {
  test::RandomConstraints gen(0x5eed);
  int agreed = 0;
  for (int round = 0; round < kSolverCases; ++round) {
    const auto f = gen.formula(2);
    const auto [dx, dy] = gen.domains();
    if ((dx.second - dx.first + 1) * (dy.second - dy.first + 1) > kSolverDomainMax) return {false, "domain too big"};
    const auto prog = compile("Map m(k: int) returns (v: int);\naction a(x: int, y: int) returns (r: int) := {\n"
                              "  r := extern call f(x, y);\n  requires (" + f->text() + ");\n}\n");
    const ActionInfo& info = prog->action("a");
    StateStore st(prog->program.maps);
    SolveRequest req;
    req.constraints = {collect_scoped_constraints(info, info.untrusted_call).at(0).constraint};
    Unknown x = make_unknown("x", GkType::integer(IntKind::Int));
    Unknown y = make_unknown("y", GkType::integer(IntKind::Int));
    x.lo = dx.first;
    x.hi = dx.second;
    y.lo = dy.first;
    y.hi = dy.second;
    req.unknowns = {x, y};
    req.bindings = {{"r", Value::wide(0)}};
    req.state = &st;
    req.seed = static_cast<std::uint64_t>(round);
    req.max_solutions = 1;

    bool any_true = false, any_false = false;
    for (long long a = dx.first; a <= dx.second; ++a) {
      for (long long b = dy.first; b <= dy.second; ++b) (f->holds(a, b) ? any_true : any_false) = true;
    }
    auto at = [](const Bindings& s, const char* n) { return static_cast<long long>(s.at(n).as_int()); };
    const SolveResult sat = solve(req);
    const SolveResult vio = solve_violations(req);
    const bool ok = sat.ok() == any_true && vio.ok() == any_false &&
                    std::all_of(sat.solutions.begin(), sat.solutions.end(),
                                [&](const Bindings& s) { return f->holds(at(s, "x"), at(s, "y")); }) &&
                    std::none_of(vio.solutions.begin(), vio.solutions.end(),
                                 [&](const Bindings& s) { return f->holds(at(s, "x"), at(s, "y")); });
    if (!ok) return {false, "disagrees on " + f->text()};
    ++agreed;
  }
  return {agreed == kSolverCases, std::to_string(agreed) + "/" + std::to_string(kSolverCases) + " formulas"};
}

Outcome deterministic_and_replayable() {
  const auto fs_model = load_bundled("fs");
  const auto suite = load_suite(src("suites/fs"));
  BackendSpec mock;
  mock.kind = BackendKind::Mock;
  mock.seed = 17;
  const bool suites_same = run_suite(suite, fs_model, mock, 2).to_json() == run_suite(suite, fs_model, mock, 2).to_json();

  FuzzPlan plan;
  plan.program = fs_model;
  plan.budget = 5;
  plan.seed = 17;
  const auto scenario = load_script(src("suites/scenarios/001_fs_workload.json"));
  const bool fuzz_same = run_campaign(plan, scenario, InjectionMode::Shielded).to_json() ==
                         run_campaign(plan, scenario, InjectionMode::Shielded).to_json();

  const fs::path dir = fs::temp_directory_path() / "gk_acceptance_trace";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::size_t replayed = 0;
  bool replay_same = true;
  for (const auto& script : suite) {
    const std::string path = (dir / (script.name + ".jsonl")).string();
    std::vector<Verdict> live;
    {
      ValidatorOptions opts;
      opts.trace = TraceWriter::open(path);
      ValidatorSession v(fs_model, correct_service("fs"), opts);
      for (const auto& st : run_script(script, v, BackendKind::ValidatorCorrect).steps) live.push_back(st.verdict);
    }
    const Trace trace = read_trace_file(*fs_model, path);
    const auto again = replay(fs_model, trace);
    std::vector<Verdict> recorded;
    for (const auto& r : trace.records) recorded.push_back(r.verdict);
    if (again != recorded || recorded != live) replay_same = false;
    ++replayed;
  }
  fs::remove_all(dir);

  std::ostringstream d;
  d << "suite json " << (suites_same ? "stable" : "differs") << ", campaign json "
    << (fuzz_same ? "stable" : "differs") << ", " << replayed << " traces " << (replay_same ? "match" : "diverge");
  return {suites_same && fuzz_same && replay_same, d.str()};
}

}  // namespace
}  // namespace gk

int main() {
  struct Criterion {
    const char* name;
    std::function<gk::Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {"correct services pass fs and sync suites", gk::correct_services_pass},
      {"mock passes fs and sync suites across seeds", gk::mock_passes_suites},
      {"every adversary caught at its attack step", gk::attacks_caught},
      {"shielded fuzzing is fully contained", gk::shielded_campaign},
      {"raw fuzzing reaches an fd-aliasing fault", gk::raw_campaign},
      {"suites detect model mutants", gk::mutants_detected},
      {"concurrent locking keeps mutual exclusion", gk::lock_stress},
      {"solver agrees with enumeration", gk::solver_vs_enumeration},
      {"fixed seeds are reproducible and traces replay", gk::deterministic_and_replayable},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    gk::Outcome o{false, ""};
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

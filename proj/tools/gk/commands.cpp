#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gatekeeper/conformance.hpp"
#include "gatekeeper/error.hpp"
#include "gatekeeper/frontend.hpp"
#include "gatekeeper/fuzz.hpp"
#include "gatekeeper/models.hpp"
#include "gatekeeper/trace.hpp"

namespace gk::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string model;
  std::string family;  // overrides the model name used to pick a service
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("GK_SEED")) {
    try {
      return std::stoull(env, nullptr, 0);
    } catch (const std::exception&) {
      throw Error(ErrorCode::IoError, std::string("GK_SEED is not an integer: ") + env);
    }
  }
  return 0;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Model source and name: an existing file, or a bundled model name.
std::pair<std::string, std::string> model_source(const Common& c) {
  std::error_code ec;
  std::string name;
  std::string src;
  if (fs::is_regular_file(c.model, ec)) {
    src = read_file(c.model);
    name = fs::path(c.model).stem().string();
  } else {
    const auto& names = bundled_model_names();
    if (std::find(names.begin(), names.end(), c.model) == names.end()) {
      throw Error(ErrorCode::IoError, "no such model file or bundled model: " + c.model);
    }
    src = std::string(bundled_model_source(c.model));
    name = c.model;
  }
  if (!c.family.empty()) name = c.family;
  return {std::move(src), std::move(name)};
}

ProgramPtr load_model(const Common& c) {
  auto [src, name] = model_source(c);
  return compile(src, name);
}

void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + c.out);
  f << text;
}

void add_common(CLI::App* sub, Common& c, bool with_seed) {
  sub->add_option("model", c.model, "model file or bundled model name (fs, sync)")->required();
  sub->add_option("--family", c.family, "service family for a model file (fs or sync)");
  sub->add_option("-o,--out", c.out, "write JSON output to this file instead of stdout");
  sub->add_flag("-q,--quiet", c.quiet, "no summary on stderr");
  if (with_seed) sub->add_option("--seed", c.seed, "seed (falls back to GK_SEED, then 0)");
}

void summarize(const SuiteReport& rep, const Common& c, std::ostream& err) {
  if (c.quiet) return;
  for (const auto& r : rep.results) {
    if (r.pass) continue;
    err << "FAIL " << r.name << " (seed " << r.seed << ") step " << r.failed_step << ": " << to_string(r.reason)
        << ": " << r.detail;
    if (r.classification != Classification::None) err << " [" << to_string(r.classification) << "]";
    err << "\n";
  }
  err << rep.passed() << "/" << rep.results.size() << " passed on " << to_string(rep.backend)
      << (rep.variant.empty() ? "" : " " + rep.variant) << "\n";
}

// ---------------------------------------------------------------- commands

int cmd_check(const Common& c, bool print, std::ostream& out, std::ostream& err) {
  auto [src, name] = model_source(c);
  std::vector<Diagnostic> diags;
  std::shared_ptr<TypedModelProgram> typed;
  ParseResult pr = parse(src, name);
  diags = pr.diagnostics;
  if (pr.ok()) {
    TypecheckResult tr = typecheck(*pr.program);
    diags.insert(diags.end(), tr.diagnostics.begin(), tr.diagnostics.end());
    typed = tr.program;
  }
  for (const auto& d : diags) err << c.model << ":" << d.to_string() << "\n";
  if (!diags.empty() || !typed) return kExitFindings;
  if (print) emit(c, pretty_print(typed->program), out);
  if (!c.quiet) {
    err << c.model << ": ok, " << typed->actions.size() << " actions"
        << (typed->thread_safe ? ", thread-safe" : "") << "\n";
  }
  return kExitOk;
}

int cmd_validate(const Common& c, const std::string& service, const std::string& suite, const std::string& trace,
                 std::ostream& out, std::ostream& err) {
  ProgramPtr program = load_model(c);
  auto scripts = load_scripts(suite);
  BackendSpec spec;
  spec.seed = resolve_seed(c);
  if (service == "correct") {
    spec.kind = BackendKind::ValidatorCorrect;
  } else if (service == "mock") {
    spec.kind = BackendKind::ValidatorOnMock;
  } else {
    spec.kind = BackendKind::ValidatorAdversary;
    spec.variant = service;
    const auto& cat = adversary_catalog();
    if (std::none_of(cat.begin(), cat.end(), [&](const AdversaryVariant& v) { return v.id == service; })) {
      throw Error(ErrorCode::UnknownVariant, "unknown service '" + service + "'");
    }
  }
  if (!trace.empty()) {
    const bool many = scripts.size() > 1;
    if (many) fs::create_directories(trace);
    spec.trace = [trace, many](const TestScript& s, std::uint64_t) {
      return TraceWriter::open(many ? (fs::path(trace) / (s.name + ".jsonl")).string() : trace);
    };
  }
  SuiteReport rep = run_suite(scripts, program, spec);
  emit(c, rep.to_json(), out);
  summarize(rep, c, err);
  return rep.all_passed() ? kExitOk : kExitFindings;
}

int cmd_mock(const Common& c, const std::string& suite, unsigned seeds, std::ostream& out, std::ostream& err) {
  ProgramPtr program = load_model(c);
  BackendSpec spec;
  spec.kind = BackendKind::Mock;
  spec.seed = resolve_seed(c);
  SuiteReport rep = run_suite(load_scripts(suite), program, spec, seeds);
  emit(c, rep.to_json(), out);
  summarize(rep, c, err);
  return rep.all_passed() ? kExitOk : kExitFindings;
}

int cmd_fuzz(const Common& c, const std::string& scenario, std::size_t budget, const std::string& hints,
             const std::string& mode, unsigned jobs, const std::vector<std::string>& actions, std::ostream& out,
             std::ostream& err) {
  FuzzPlan plan;
  plan.program = load_model(c);
  plan.budget = budget;
  plan.seed = resolve_seed(c);
  plan.hints = hints == "on";
  plan.jobs = jobs;
  plan.actions = actions;
  const InjectionMode m = mode == "raw" ? InjectionMode::Raw : InjectionMode::Shielded;
  std::unique_ptr<FuzzTarget> target;
  if (m == InjectionMode::Raw) target = make_shadow_tag_fs();
  FuzzCampaignReport rep = run_campaign(plan, load_script(scenario), m, target.get());
  emit(c, rep.to_json(), out);
  if (!c.quiet) {
    err << rep.total() << " injections at " << rep.points.size() << " points: "
        << rep.count(InjectionOutcome::ValidatorCaught) << " caught, " << rep.count(InjectionOutcome::TargetFault)
        << " target faults, " << rep.count(InjectionOutcome::Clean) << " clean\n";
    for (const auto& s : rep.fault_signatures) err << "fault: " << s << "\n";
  }
  const bool success = m == InjectionMode::Raw ? rep.count(InjectionOutcome::TargetFault) == 0
                                               : rep.count(InjectionOutcome::ValidatorCaught) == rep.total();
  return success ? kExitOk : kExitFindings;
}

int cmd_replay(const Common& c, const std::string& trace_path, std::ostream& out, std::ostream& err) {
  ProgramPtr program = load_model(c);
  Trace trace = read_trace_file(*program, trace_path);
  std::vector<Verdict> verdicts = replay(program, trace);
  std::string text;
  std::size_t diverged = 0;
  std::size_t failing = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    text += verdict_to_json(*program, verdicts[i]) + "\n";
    if (i >= trace.records.size() || !(verdicts[i] == trace.records[i].verdict)) ++diverged;
    if (!verdicts[i].ok()) ++failing;
  }
  emit(c, text, out);
  if (!c.quiet) {
    err << verdicts.size() << " records replayed, " << failing << " not ok, " << diverged
        << " diverging from the recorded verdicts\n";
  }
  return diverged == 0 && failing == 0 ? kExitOk : kExitFindings;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model-driven validator, mock and fuzzer for untrusted services", "gk"};
  app.require_subcommand(1);

  Common common;
  bool print = false;
  std::string service = "correct";
  std::string suite;
  std::string trace;
  std::string trace_file;
  unsigned seeds = 10;
  std::string scenario;
  std::size_t budget = kDefaultFuzzBudget;
  std::string hints = "on";
  std::string mode = "shielded";
  unsigned jobs = 1;
  std::vector<std::string> actions;

  auto* check = app.add_subcommand("check", "parse and typecheck a model");
  add_common(check, common, false);
  check->add_flag("--print", print, "print the canonical form of the model");

  auto* validate = app.add_subcommand("validate", "run a suite through the validator");
  add_common(validate, common, true);
  validate->add_option("--service", service, "correct, mock, or an adversary variant id");
  validate->add_option("--suite", suite, "script file or directory")->required();
  validate->add_option("--trace", trace, "JSONL trace file (a directory for several scripts)");

  auto* mock = app.add_subcommand("mock", "run a suite on the generated mock");
  add_common(mock, common, true);
  mock->add_option("--suite", suite, "script file or directory")->required();
  mock->add_option("--seeds", seeds, "runs per script, consecutive seeds from --seed")->check(CLI::PositiveNumber);

  auto* fuzz = app.add_subcommand("fuzz", "inject model-violating results into a scenario");
  add_common(fuzz, common, true);
  fuzz->add_option("--scenario", scenario, "scenario script")->required();
  fuzz->add_option("--budget", budget, "malicious values per injection point");
  fuzz->add_option("--hints", hints, "use the model's fuzz hints")->check(CLI::IsMember({"on", "off"}));
  fuzz->add_option("--mode", mode, "raw or shielded")->check(CLI::IsMember({"raw", "shielded"}));
  fuzz->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  fuzz->add_option("--actions", actions, "restrict injection to these actions")->delimiter(',');

  auto* rep = app.add_subcommand("replay", "re-execute a recorded trace");
  add_common(rep, common, false);
  rep->add_option("trace", trace_file, "trace file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "gk: " << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) err << sub->help();
    return kExitUsage;
  }

  try {
    if (*check) return cmd_check(common, print, out, err);
    if (*validate) return cmd_validate(common, service, suite, trace, out, err);
    if (*mock) return cmd_mock(common, suite, seeds, out, err);
    if (*fuzz) return cmd_fuzz(common, scenario, budget, hints, mode, jobs, actions, out, err);
    if (*rep) return cmd_replay(common, trace_file, out, err);
  } catch (const Error& e) {
    err << "gk: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "gk: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace gk::cli

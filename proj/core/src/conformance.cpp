#include "gatekeeper/conformance.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gatekeeper/error.hpp"
#include "gatekeeper/mock.hpp"
#include "gatekeeper/trace.hpp"
#include "gatekeeper/validator.hpp"
#include "json_io.hpp"

namespace gk {

using detail::Json;

namespace {

[[noreturn]] void bad_script(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ScriptParseError, where + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<WideInt> parse_literal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  } else if (s.size() > 1 && s[0] == '0') {
    base = 8;
    s.remove_prefix(1);
  }
  WideInt v = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else return std::nullopt;
    if (d >= base) return std::nullopt;
    v = v * base + d;
    if (v > (WideInt{1} << 64)) return std::nullopt;
  }
  return v;
}

/// One term: [-]literal, [-]CONSTANT or [-]$var.
WideInt eval_term(std::string_view term, const Bindings& bound) {
  term = trim(term);
  bool neg = false;
  if (!term.empty() && term.front() == '-') {
    neg = true;
    term = trim(term.substr(1));
  }
  WideInt v;
  if (!term.empty() && term.front() == '$') {
    auto it = bound.find(term.substr(1));
    if (it == bound.end() || !it->second.is_int()) {
      throw Error(ErrorCode::ScenarioError, "unbound script variable '" + std::string(term) + "'");
    }
    v = it->second.as_int();
  } else if (auto lit = parse_literal(term)) {
    v = *lit;
  } else if (auto c = builtin_constant(term)) {
    v = *c;
  } else {
    throw Error(ErrorCode::ScriptParseError, "bad integer term '" + std::string(term) + "'");
  }
  return neg ? -v : v;
}

/// `A|B|C` of terms.
WideInt eval_flags(std::string_view text, const Bindings& bound) {
  WideInt acc = 0;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = text.find('|', start);
    acc |= eval_term(text.substr(start, bar == std::string_view::npos ? bar : bar - start), bound);
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return acc;
}

ScriptArg parse_arg(const Json& j, const std::string& where) {
  ScriptArg a;
  if (j.is_number_integer()) {
    a.value = j.is_number_unsigned() ? WideInt(j.get<std::uint64_t>()) : WideInt(j.get<std::int64_t>());
  } else if (j.is_string()) {
    a.value = j.get<std::string>();
  } else if (j.is_object() && j.size() == 1) {
    if (j.contains("var") && j["var"].is_string()) {
      a.value = ScriptArg::Var{j["var"].get<std::string>()};
    } else if (j.contains("buf") && j["buf"].is_number_unsigned()) {
      std::size_t n = j["buf"].get<std::size_t>();
      if (n > kMaxArrayLength) bad_script(where, "buffer larger than the array limit");
      a.value = ScriptArg::Buf{n};
    } else if (j.contains("bytes") && j["bytes"].is_string()) {
      a.value = parse_byte_pattern(j["bytes"].get<std::string>());
    } else if (j.contains("expr") && j["expr"].is_string()) {
      a.value = eval_flags(j["expr"].get<std::string>(), {});
    } else {
      bad_script(where, "unknown argument object " + j.dump());
    }
  } else {
    bad_script(where, "unsupported argument " + j.dump());
  }
  return a;
}

}  // namespace

// ------------------------------------------------------------------ parsing

Expectation Expectation::parse(std::string_view text) {
  Expectation e;
  e.text = std::string(text);
  std::string_view s = trim(text);
  if (s.empty() || s == "any" || s == "*") return e;
  static const std::pair<std::string_view, Op> kOps[] = {{"==", Op::Eq}, {"!=", Op::Ne}, {">=", Op::Ge},
                                                         {"<=", Op::Le}, {">", Op::Gt},  {"<", Op::Lt}};
  for (const auto& [tok, op] : kOps) {
    if (s.substr(0, tok.size()) == tok) {
      e.op = op;
      s = trim(s.substr(tok.size()));
      break;
    }
  }
  if (e.op == Op::Any) throw Error(ErrorCode::ScriptParseError, "expectation without operator: '" + e.text + "'");
  if (!s.empty() && s.front() == '-') {
    e.negate = true;
    s = trim(s.substr(1));
  }
  if (s.empty()) throw Error(ErrorCode::ScriptParseError, "expectation without operand: '" + e.text + "'");
  e.operand = std::string(s);
  if (e.operand.front() != '$' && !parse_literal(e.operand) && !builtin_constant(e.operand)) {
    throw Error(ErrorCode::ScriptParseError, "unknown operand in expectation '" + e.text + "'");
  }
  return e;
}

std::vector<std::uint8_t> parse_byte_pattern(std::string_view text) {
  std::vector<std::uint8_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t plus = text.find('+', start);
    std::string_view part = trim(text.substr(start, plus == std::string_view::npos ? plus : plus - start));
    if (part.substr(0, 7) == "repeat(" && part.back() == ')') {
      std::string_view inner = part.substr(7, part.size() - 8);
      std::size_t comma = inner.find(',');
      if (comma == std::string_view::npos) throw Error(ErrorCode::ScriptParseError, "repeat needs two operands");
      auto byte = parse_literal(trim(inner.substr(0, comma)));
      auto count = parse_literal(trim(inner.substr(comma + 1)));
      if (!byte || *byte > 0xff || !count || *count > static_cast<WideInt>(kMaxArrayLength)) {
        throw Error(ErrorCode::ScriptParseError, "bad repeat pattern '" + std::string(part) + "'");
      }
      out.insert(out.end(), static_cast<std::size_t>(*count), static_cast<std::uint8_t>(*byte));
    } else {
      try {
        auto bytes = detail::from_hex(part);
        out.insert(out.end(), bytes.begin(), bytes.end());
      } catch (const std::exception&) {
        throw Error(ErrorCode::ScriptParseError, "bad byte pattern '" + std::string(part) + "'");
      }
    }
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return out;
}

TestScript parse_script(std::string_view json_text, std::string fallback_name) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ScriptParseError, fallback_name + ": " + e.what());
  }
  if (!doc.is_object()) bad_script(fallback_name, "document is not an object");
  TestScript s;
  s.name = doc.value("name", fallback_name);
  if (!doc.contains("steps") || !doc["steps"].is_array()) bad_script(s.name, "missing steps array");
  if (doc.contains("seeds")) {
    if (!doc["seeds"].is_number_unsigned() || doc["seeds"].get<unsigned>() == 0) bad_script(s.name, "seeds must be >= 1");
    s.seeds = doc["seeds"].get<unsigned>();
  }
  if (doc.contains("attack_step")) {
    if (!doc["attack_step"].is_number_unsigned()) bad_script(s.name, "attack_step must be a step index");
    s.attack_step = doc["attack_step"].get<std::size_t>();
  }
  if (doc.contains("variant")) s.variant = doc["variant"].get<std::string>();
  std::size_t i = 0;
  for (const auto& js : doc["steps"]) {
    const std::string where = s.name + " step " + std::to_string(i++);
    if (!js.is_object() || !js.contains("action") || !js["action"].is_string()) bad_script(where, "missing action");
    ScriptStep st;
    st.action = js["action"].get<std::string>();
    if (js.contains("args")) {
      if (!js["args"].is_array()) bad_script(where, "args must be an array");
      for (const auto& ja : js["args"]) st.args.push_back(parse_arg(ja, where));
    }
    if (js.contains("expect")) {
      if (!js["expect"].is_string()) bad_script(where, "expect must be a string");
      st.expect = Expectation::parse(js["expect"].get<std::string>());
    }
    if (js.contains("expect_buf")) st.expect_buf = parse_byte_pattern(js["expect_buf"].get<std::string>());
    if (js.contains("bind")) st.bind = js["bind"].get<std::string>();
    s.steps.push_back(std::move(st));
  }
  if (s.attack_step && *s.attack_step >= s.steps.size()) bad_script(s.name, "attack_step past the last step");
  return s;
}

TestScript load_script(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read script " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  TestScript s = parse_script(ss.str(), file.stem().string());
  s.source = file;
  return s;
}

std::vector<TestScript> load_suite(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& ent : std::filesystem::directory_iterator(dir)) {
    if (ent.is_regular_file() && ent.path().extension() == ".json") files.push_back(ent.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TestScript> out;
  for (const auto& f : files) out.push_back(load_script(f));
  return out;
}

std::vector<TestScript> load_scripts(const std::filesystem::path& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) return load_suite(path);
  return {load_script(path)};
}

void check_script(const TestScript& script, const TypedModelProgram& program) {
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& st = script.steps[i];
    if (program.actions.find(st.action) == program.actions.end()) {
      bad_script(script.name + " step " + std::to_string(i), "model has no action '" + st.action + "'");
    }
    if (st.args.size() != program.action(st.action).decl->params.size()) {
      bad_script(script.name + " step " + std::to_string(i), "wrong argument count for '" + st.action + "'");
    }
  }
}

// ----------------------------------------------------------------- backends

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::ValidatorCorrect: return "validator-correct";
    case BackendKind::ValidatorAdversary: return "validator-adversary";
    case BackendKind::Mock: return "mock";
    case BackendKind::ValidatorOnMock: return "validator-on-mock";
  }
  return "?";
}

ServiceBinding correct_service(std::string_view model_name) {
  if (model_name == "fs") return correct_fs();
  if (model_name == "sync") return correct_sync();
  throw Error(ErrorCode::ServiceUnavailable, "no simulated service for model '" + std::string(model_name) + "'");
}

std::unique_ptr<ActionBackend> make_backend(ProgramPtr program, const BackendSpec& spec, std::uint64_t seed,
                                            std::shared_ptr<TraceWriter> trace) {
  ValidatorOptions vopt;
  vopt.trace = std::move(trace);
  switch (spec.kind) {
    case BackendKind::ValidatorCorrect:
      return std::make_unique<ValidatorSession>(program, correct_service(program->name()), vopt);
    case BackendKind::ValidatorAdversary:
      return std::make_unique<ValidatorSession>(program, adversary(correct_service(program->name()), spec.variant),
                                                vopt);
    case BackendKind::Mock: {
      MockOptions mopt;
      mopt.seed = seed;
      return std::make_unique<MockSession>(program, mopt);
    }
    case BackendKind::ValidatorOnMock: {
      MockOptions mopt;
      mopt.seed = seed;
      auto mock = std::make_shared<MockSession>(program, mopt);
      return std::make_unique<ValidatorSession>(program, mock_binding(mock), vopt);
    }
  }
  throw Error(ErrorCode::DesignError, "unknown backend kind");
}

// ------------------------------------------------------------------ running

std::string_view to_string(FailReason reason) {
  switch (reason) {
    case FailReason::ExpectationFailed: return "ExpectationFailed";
    case FailReason::Violation: return "Violation";
    case FailReason::ModelUnsat: return "ModelUnsat";
    case FailReason::ModelError: return "ModelError";
  }
  return "?";
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::None: return "";
    case Classification::OverRestrictive: return "OVER_RESTRICTIVE";
    case Classification::OverPermissive: return "OVER_PERMISSIVE";
  }
  return "";
}

std::vector<Value> resolve_args(const ScriptStep& step, const Bindings& bound) {
  std::vector<Value> out;
  out.reserve(step.args.size());
  for (const auto& a : step.args) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, WideInt>) {
            out.push_back(Value::wide(v));
          } else if constexpr (std::is_same_v<T, std::string>) {
            out.push_back(Value::str(v));
          } else if constexpr (std::is_same_v<T, ScriptArg::Var>) {
            auto it = bound.find(v.name);
            if (it == bound.end()) throw Error(ErrorCode::ScenarioError, "unbound script variable '" + v.name + "'");
            out.push_back(it->second);
          } else if constexpr (std::is_same_v<T, ScriptArg::Buf>) {
            out.push_back(Value::bytes(std::vector<std::uint8_t>(v.size, 0)));
          } else {
            out.push_back(Value::bytes(v));
          }
        },
        a.value);
  }
  return out;
}

std::optional<std::string> check_step(const ScriptStep& step, const Verdict& verdict, const ActionInfo& info,
                                      const Bindings& bound) {
  const Expectation& e = step.expect;
  if (e.op != Expectation::Op::Any) {
    if (!verdict.ret.is_int()) return "result is not an integer";
    WideInt want = eval_term((e.negate ? "-" : "") + e.operand, bound);
    WideInt got = verdict.ret.as_int();
    bool ok = false;
    switch (e.op) {
      case Expectation::Op::Eq: ok = got == want; break;
      case Expectation::Op::Ne: ok = got != want; break;
      case Expectation::Op::Lt: ok = got < want; break;
      case Expectation::Op::Le: ok = got <= want; break;
      case Expectation::Op::Gt: ok = got > want; break;
      case Expectation::Op::Ge: ok = got >= want; break;
      case Expectation::Op::Any: ok = true; break;
    }
    if (!ok) return "expected result " + e.text + ", got " + verdict.ret.to_string();
  }
  if (step.expect_buf) {
    const Value* buf = nullptr;
    for (const auto& p : info.decl->params) {
      auto it = verdict.outputs.find(p.name);
      if (it != verdict.outputs.end() && it->second.is_bytes()) {
        buf = &it->second;
        break;
      }
    }
    if (buf == nullptr) return "action has no buffer argument";
    const auto& have = buf->as_bytes();
    const auto& want = *step.expect_buf;
    if (have.size() < want.size() || !std::equal(want.begin(), want.end(), have.begin())) {
      auto mismatch = std::mismatch(want.begin(), want.end(), have.begin(),
                                    have.begin() + static_cast<std::ptrdiff_t>(std::min(have.size(), want.size())));
      return "buffer differs from expect_buf at byte " + std::to_string(mismatch.first - want.begin());
    }
  }
  return std::nullopt;
}

ScriptResult run_script(const TestScript& script, ActionBackend& backend, BackendKind kind, std::uint64_t seed) {
  ScriptResult r;
  r.name = script.name;
  r.seed = seed;
  Bindings bound;
  auto fail = [&](std::size_t i, FailReason reason, std::string detail) {
    r.pass = false;
    r.failed_step = i;
    r.reason = reason;
    r.detail = std::move(detail);
    if (kind == BackendKind::ValidatorCorrect) r.classification = Classification::OverRestrictive;
    if (kind == BackendKind::Mock) r.classification = Classification::OverPermissive;
  };
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const ScriptStep& st = script.steps[i];
    Verdict v;
    try {
      v = backend.invoke(st.action, resolve_args(st, bound));
    } catch (const Error& e) {
      fail(i, FailReason::ModelError, e.what());
      return r;
    }
    r.steps.push_back({i, v});
    switch (v.outcome) {
      case Verdict::Outcome::Violation:
        fail(i, FailReason::Violation, v.violation ? "violated: " + v.violation->constraint : "violation");
        return r;
      case Verdict::Outcome::ModelError:
        fail(i, v.error_code == ErrorCode::ModelUnsat ? FailReason::ModelUnsat : FailReason::ModelError, v.error);
        return r;
      case Verdict::Outcome::Ok:
        break;
    }
    try {
      if (auto why = check_step(st, v, backend.program().action(st.action), bound)) {
        fail(i, FailReason::ExpectationFailed, *why);
        return r;
      }
    } catch (const Error& e) {
      fail(i, FailReason::ExpectationFailed, e.what());
      return r;
    }
    if (st.bind) bound[*st.bind] = v.ret;
  }
  return r;
}

SuiteReport run_suite(const std::vector<TestScript>& scripts, ProgramPtr program, const BackendSpec& spec,
                      unsigned seeds) {
  for (const auto& s : scripts) check_script(s, *program);
  SuiteReport rep;
  rep.backend = spec.kind;
  rep.variant = spec.variant;
  const bool mocked = spec.kind == BackendKind::Mock || spec.kind == BackendKind::ValidatorOnMock;
  for (const auto& s : scripts) {
    const unsigned runs = mocked ? (seeds != 0 ? seeds : s.seeds) : 1;
    for (unsigned k = 0; k < runs; ++k) {
      const std::uint64_t seed = spec.seed + k;
      auto trace = spec.trace ? spec.trace(s, seed) : nullptr;
      auto backend = make_backend(program, spec, seed, trace);
      rep.results.push_back(run_script(s, *backend, spec.kind, seed));
    }
  }
  return rep;
}

std::size_t SuiteReport::passed() const {
  return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass; }));
}

std::string SuiteReport::to_json() const {
  Json doc;
  doc["backend"] = std::string(to_string(backend));
  if (!variant.empty()) doc["variant"] = variant;
  doc["total"] = results.size();
  doc["passed"] = passed();
  doc["failed"] = failed();
  Json arr = Json::array();
  for (const auto& r : results) {
    Json j;
    j["name"] = r.name;
    j["seed"] = r.seed;
    j["outcome"] = r.pass ? "PASS" : "FAIL";
    if (!r.pass) {
      j["step"] = r.failed_step;
      j["reason"] = std::string(to_string(r.reason));
      j["detail"] = r.detail;
      if (r.classification != Classification::None) j["classification"] = std::string(to_string(r.classification));
    }
    arr.push_back(std::move(j));
  }
  doc["scripts"] = std::move(arr);
  return doc.dump(2) + "\n";
}

}  // namespace gk

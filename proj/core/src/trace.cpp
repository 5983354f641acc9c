#include "gatekeeper/trace.hpp"

#include <istream>
#include <sstream>

#include "gatekeeper/error.hpp"
#include "gatekeeper/trusted.hpp"
#include "json_io.hpp"

namespace gk {

using detail::Json;
using detail::value_from_json;
using detail::value_to_json;

namespace {

ErrorCode error_code_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::IoError); ++i) {
    const auto c = static_cast<ErrorCode>(i);
    if (to_string(c) == s) return c;
  }
  throw Error(ErrorCode::CorruptTrace, "unknown error code '" + std::string(s) + "'");
}

Json bindings_to_json(const Bindings& b) {
  Json j = Json::object();
  for (const auto& [k, v] : b) j[k] = value_to_json(v);
  return j;
}

Bindings bindings_from_json(const Json& j, const ActionInfo& info) {
  Bindings b;
  for (const auto& [k, v] : j.items()) {
    auto it = info.variables.find(k);
    try {
      b[k] = it != info.variables.end() ? value_from_json(v, it->second) : detail::value_from_json_untyped(v);
    } catch (const Error&) {
      b[k] = detail::value_from_json_untyped(v);  // e.g. an out-of-range service result
    }
  }
  return b;
}

Json violation_to_json(const Violation& v) {
  return Json{{"constraint", v.constraint}, {"action", v.action}, {"seq", v.seq},
              {"bindings", bindings_to_json(v.bindings)}};
}

Violation violation_from_json(const Json& j, const ActionInfo& info) {
  Violation v;
  v.constraint = j.at("constraint").get<std::string>();
  v.action = j.at("action").get<std::string>();
  v.seq = j.at("seq").get<std::uint64_t>();
  v.bindings = bindings_from_json(j.at("bindings"), info);
  return v;
}

Json verdict_json(const TypedModelProgram&, const Verdict& v) {
  Json j;
  j["outcome"] = std::string(to_string(v.outcome));
  switch (v.outcome) {
    case Verdict::Outcome::Ok: j["ret"] = value_to_json(v.ret); break;
    case Verdict::Outcome::Violation: {
      j["violation"] = violation_to_json(*v.violation);
      Json rec = Json::array();
      for (const auto& r : v.recorded) rec.push_back(violation_to_json(r));
      j["recorded"] = rec;
      break;
    }
    case Verdict::Outcome::ModelError:
      j["code"] = std::string(to_string(v.error_code));
      j["message"] = v.error;
      break;
  }
  j["outputs"] = bindings_to_json(v.outputs);
  return j;
}

Verdict verdict_from_json(const Json& j, const ActionInfo& info, const std::string& action, std::uint64_t seq) {
  Verdict v;
  v.action = action;
  v.seq = seq;
  const std::string outcome = j.at("outcome").get<std::string>();
  if (outcome == "ok") {
    v.ret = value_from_json(j.at("ret"), info.decl->result.type);
  } else if (outcome == "violation") {
    v.outcome = Verdict::Outcome::Violation;
    v.violation = violation_from_json(j.at("violation"), info);
    for (const auto& r : j.at("recorded")) v.recorded.push_back(violation_from_json(r, info));
  } else if (outcome == "model_error") {
    v.outcome = Verdict::Outcome::ModelError;
    v.error_code = error_code_from_string(j.at("code").get<std::string>());
    v.error = j.at("message").get<std::string>();
  } else {
    throw Error(ErrorCode::CorruptTrace, "unknown verdict outcome '" + outcome + "'");
  }
  v.outputs = bindings_from_json(j.at("outputs"), info);
  return v;
}

// Types of an extern event's arguments and result.
std::pair<std::vector<GkType>, GkType> extern_types(const ActionInfo& info, const std::string& fn) {
  if (const auto* sig = trusted_signature(fn)) return {sig->params, sig->result};
  std::vector<GkType> params;
  for (const auto& p : info.decl->params) params.push_back(p.type);
  return {params, info.decl->result.type};
}

Json write_to_json(const StateWrite& w) {
  Json key = Json::array();
  for (const auto& k : w.key) key.push_back(value_to_json(k));
  Json j{{"map", w.map}, {"key", key}};
  if (w.field.empty()) {
    j["delete"] = true;
  } else {
    j["field"] = w.field;
    j["value"] = value_to_json(w.value);
  }
  return j;
}

StateWrite write_from_json(const Json& j, const StateStore& shape) {
  StateWrite w;
  w.map = j.at("map").get<std::string>();
  const MapDecl& decl = shape.decl(w.map);
  const auto& key = j.at("key");
  if (key.size() != decl.keys.size()) throw Error(ErrorCode::CorruptTrace, "key arity in state delta");
  for (std::size_t i = 0; i < key.size(); ++i) w.key.push_back(value_from_json(key[i], decl.keys[i].type));
  if (j.contains("delete")) return w;
  w.field = j.at("field").get<std::string>();
  const Param* p = decl.find_field(w.field);
  if (p == nullptr) throw Error(ErrorCode::CorruptTrace, "unknown field in state delta");
  w.value = value_from_json(j.at("value"), p->type);
  return w;
}

Json record_json(const TypedModelProgram& program, const ActionRecord& r) {
  Json args = Json::array();
  for (const auto& a : r.args) args.push_back(value_to_json(a));
  Json ext = Json::array();
  for (const auto& e : r.externs) {
    Json ea = Json::array();
    for (const auto& a : e.args) ea.push_back(value_to_json(a));
    ext.push_back(Json{{"fn", e.fn}, {"args", ea}, {"ret", value_to_json(e.ret)}});
  }
  Json asserts = Json::array();
  for (const auto& a : r.asserts) asserts.push_back(Json{{"src", a.src}, {"ok", a.ok}});
  Json delta = Json::array();
  for (const auto& w : r.delta) delta.push_back(write_to_json(w));
  Json j;
  j["seq"] = r.seq;
  j["action"] = r.action;
  j["args"] = args;
  j["extern"] = ext;
  j["asserts"] = asserts;
  j["state_delta"] = delta;
  j["verdict"] = verdict_json(program, r.verdict);
  return j;
}

ActionRecord record_from_json(const TypedModelProgram& program, const StateStore& shape, const Json& j) {
  ActionRecord r;
  r.seq = j.at("seq").get<std::uint64_t>();
  r.action = j.at("action").get<std::string>();
  const ActionInfo& info = program.action(r.action);
  const auto& args = j.at("args");
  if (args.size() != info.decl->params.size()) throw Error(ErrorCode::CorruptTrace, "argument count");
  for (std::size_t i = 0; i < args.size(); ++i) r.args.push_back(value_from_json(args[i], info.decl->params[i].type));
  for (const auto& e : j.at("extern")) {
    ExternEvent ev;
    ev.fn = e.at("fn").get<std::string>();
    auto [types, ret_type] = extern_types(info, ev.fn);
    const auto& ea = e.at("args");
    if (ea.size() != types.size()) throw Error(ErrorCode::CorruptTrace, "extern argument count");
    for (std::size_t i = 0; i < ea.size(); ++i) ev.args.push_back(value_from_json(ea[i], types[i]));
    // Results outside the declared range are recorded as-is.
    ev.ret = detail::value_from_json_untyped(e.at("ret"));
    if (ev.ret.is_int() && ret_type.is_int() && fits(ret_type.int_kind(), ev.ret.as_int())) {
      ev.ret = ev.ret.coerce_to(ret_type);
    } else if (!ev.ret.is_int()) {
      ev.ret = value_from_json(e.at("ret"), ret_type);
    }
    r.externs.push_back(std::move(ev));
  }
  for (const auto& a : j.at("asserts")) r.asserts.push_back({a.at("src").get<std::string>(), a.at("ok").get<bool>()});
  for (const auto& w : j.at("state_delta")) r.delta.push_back(write_from_json(w, shape));
  r.verdict = verdict_from_json(j.at("verdict"), info, r.action, r.seq);
  return r;
}

}  // namespace

std::string program_fingerprint(const TypedModelProgram& program) {
  // FNV-1a over the canonical text.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : pretty_print(program.program)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

std::shared_ptr<TraceWriter> TraceWriter::open(const std::string& path) {
  auto file = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*file) throw Error(ErrorCode::IoError, "cannot open trace file '" + path + "'");
  std::shared_ptr<TraceWriter> w(new TraceWriter());
  w->out_ = file.get();
  w->file_ = std::move(file);
  return w;
}

void TraceWriter::write_init(const TypedModelProgram& program, const StateStore& state, ViolationPolicy policy) {
  Json j;
  j["event"] = "init";
  j["version"] = kTraceVersion;
  j["model"] = program.name();
  j["fingerprint"] = program_fingerprint(program);
  j["policy"] = policy == ViolationPolicy::Abort ? "abort" : "record";
  j["state"] = Json::parse(state.snapshot_json());
  std::lock_guard lock(mu_);
  *out_ << j.dump() << '\n';
  out_->flush();
}

void TraceWriter::write(const TypedModelProgram& program, const ActionRecord& record) {
  const std::string line = record_to_json(program, record);
  std::lock_guard lock(mu_);
  *out_ << line << '\n';
  out_->flush();
}

std::string record_to_json(const TypedModelProgram& program, const ActionRecord& record) {
  return record_json(program, record).dump();
}

std::string verdict_to_json(const TypedModelProgram& program, const Verdict& verdict) {
  return verdict_json(program, verdict).dump();
}

Trace read_trace(const TypedModelProgram& program, std::istream& in) {
  Trace t;
  std::string line;
  std::size_t lineno = 0;
  bool have_init = false;
  StateStore shape(program.program.maps);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::CorruptTrace, "line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!have_init) {
        if (!j.is_object() || j.value("event", "") != "init") {
          throw Error(ErrorCode::CorruptTrace, "first line is not an init event");
        }
        t.version = j.at("version").get<int>();
        if (t.version != kTraceVersion) {
          throw Error(ErrorCode::TraceVersionMismatch, "trace version " + std::to_string(t.version) +
                                                           ", expected " + std::to_string(kTraceVersion));
        }
        t.model = j.at("model").get<std::string>();
        t.fingerprint = j.at("fingerprint").get<std::string>();
        if (t.fingerprint != program_fingerprint(program)) {
          throw Error(ErrorCode::TraceVersionMismatch, "trace was recorded against a different model");
        }
        t.policy = j.at("policy").get<std::string>() == "record" ? ViolationPolicy::Record : ViolationPolicy::Abort;
        t.init = StateStore::snapshot_from_json(program.program.maps, j.at("state").dump());
        have_init = true;
        continue;
      }
      t.records.push_back(record_from_json(program, shape, j));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::TraceVersionMismatch || e.code() == ErrorCode::CorruptTrace) throw;
      throw Error(ErrorCode::CorruptTrace, "line " + std::to_string(lineno) + ": " + e.detail());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::CorruptTrace, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_init) throw Error(ErrorCode::CorruptTrace, "trace has no init event");
  if (!in.eof() || (!line.empty() && in.fail() && !in.eof())) {
    throw Error(ErrorCode::CorruptTrace, "read error");
  }
  return t;
}

Trace read_trace_file(const TypedModelProgram& program, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open trace file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (!text.empty() && text.back() != '\n') {
    throw Error(ErrorCode::CorruptTrace, "trace is truncated (last line incomplete)");
  }
  std::istringstream is(text);
  return read_trace(program, is);
}

std::vector<Verdict> replay(ProgramPtr program, const Trace& trace) {
  struct Cursor {
    const std::vector<ExternEvent>* events = nullptr;
    std::size_t next = 0;
  };
  auto cursor = std::make_shared<Cursor>();
  ServiceBinding binding("replay");
  for (const auto& [name, info] : program->actions) {
    if (info.untrusted_fn.empty() || binding.has(info.untrusted_fn)) continue;
    const std::string fn = info.untrusted_fn;
    binding.bind(fn, [cursor, fn](std::vector<Value>& args) -> Value {
      while (cursor->events && cursor->next < cursor->events->size()) {
        const ExternEvent& e = (*cursor->events)[cursor->next++];
        if (e.fn != fn) continue;
        args = e.args;
        return e.ret;
      }
      throw Error(ErrorCode::CorruptTrace, "no recorded result for call to '" + fn + "'");
    });
  }
  ValidatorOptions options;
  options.policy = trace.policy;
  ValidatorSession session(program, binding, options);
  session.state().restore(trace.init);
  std::vector<Verdict> out;
  for (const auto& r : trace.records) {
    cursor->events = &r.externs;
    cursor->next = 0;
    Verdict v;
    try {
      v = session.invoke(r.action, r.args);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CorruptTrace) throw;
      v.action = r.action;
      v.seq = r.seq;
      v.outcome = Verdict::Outcome::ModelError;
      v.error_code = e.code();
      v.error = e.what();
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace gk

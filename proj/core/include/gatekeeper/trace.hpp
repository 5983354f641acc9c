#pragma once

#include <fstream>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gatekeeper/engine.hpp"
#include "gatekeeper/validator.hpp"

namespace gk {

inline constexpr int kTraceVersion = 1;

/// Stable hash of the program's canonical text; traces only replay against
/// a program with the same fingerprint.
std::string program_fingerprint(const TypedModelProgram& program);

/// JSON-lines trace sink. The first line is an init event carrying the
/// version, model name, fingerprint, policy and state snapshot; every
/// further line is one ActionRecord. Thread-safe.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out) : out_(&out) {}
  /// Opens (truncating) `path`; IoError on failure.
  static std::shared_ptr<TraceWriter> open(const std::string& path);

  void write_init(const TypedModelProgram& program, const StateStore& state, ViolationPolicy policy);
  void write(const TypedModelProgram& program, const ActionRecord& record);

 private:
  TraceWriter() = default;
  std::mutex mu_;
  std::ostream* out_ = nullptr;
  std::unique_ptr<std::ofstream> file_;
};

struct Trace {
  int version = kTraceVersion;
  std::string model;
  std::string fingerprint;
  ViolationPolicy policy = ViolationPolicy::Abort;
  StateSnapshot init;
  std::vector<ActionRecord> records;
};

/// Parses a trace (CorruptTrace on malformed or truncated input,
/// TraceVersionMismatch on a version or fingerprint mismatch).
Trace read_trace(const TypedModelProgram& program, std::istream& in);
Trace read_trace_file(const TypedModelProgram& program, const std::string& path);

/// Re-executes every record against the model, feeding recorded extern
/// results instead of calling a service.
std::vector<Verdict> replay(ProgramPtr program, const Trace& trace);

/// One trace line (no trailing newline).
std::string record_to_json(const TypedModelProgram& program, const ActionRecord& record);
std::string verdict_to_json(const TypedModelProgram& program, const Verdict& verdict);

}  // namespace gk

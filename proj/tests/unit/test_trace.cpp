#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gatekeeper/error.hpp"
#include "gatekeeper/trace.hpp"
#include "gatekeeper/validator.hpp"
#include "support.hpp"

namespace gk {
namespace {

using test::Buf;
using test::Cl;
using test::I;
using test::S;

struct Recorded {
  std::string text;
  std::vector<Verdict> verdicts;
};

Recorded record_workload(ServiceBinding binding, std::uint64_t seed, ViolationPolicy policy) {
  std::stringstream ss;
  auto writer = std::make_shared<TraceWriter>(ss);
  Recorded out;
  ValidatorSession v(test::fs_model(), std::move(binding), {policy, writer, {}});
  std::mt19937_64 rng(seed);
  std::vector<Value> fds = {I(-1)};
  for (int i = 0; i < 60; ++i) {
    const Value fd = fds[rng() % fds.size()];
    Verdict r;
    switch (rng() % 6) {
      case 0:
        r = v.invoke("open", {S(rng() % 2 ? "/a" : "/b"), I(Cl("O_CREAT") | Cl("O_RDWR")), I(0644)});
        if (r.ok() && r.ret.as_int() >= 0) fds.push_back(r.ret);
        break;
      case 1: r = v.invoke("write", {fd, Buf(6, static_cast<std::uint8_t>(rng())), I(6)}); break;
      case 2: r = v.invoke("read", {fd, Buf(8), I(static_cast<long long>(rng() % 9))}); break;
      case 3: r = v.invoke("lseek", {fd, I(0), I(Cl("SEEK_SET"))}); break;
      case 4: r = v.invoke("pread", {fd, Buf(4), I(4), I(static_cast<long long>(rng() % 8))}); break;
      default: r = v.invoke("fstat", {fd}); break;
    }
    out.verdicts.push_back(r);
  }
  out.text = ss.str();
  return out;
}

// Property: replaying a recorded trace reproduces every verdict exactly,
// and each parsed record serializes back to its original line.
TEST(Trace, ReplayReproducesVerdicts) {
  auto p = test::fs_model();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Recorded rec = record_workload(correct_fs(), seed, ViolationPolicy::Abort);
    std::istringstream in(rec.text);
    Trace t = read_trace(*p, in);
    ASSERT_EQ(t.records.size(), rec.verdicts.size());
    EXPECT_EQ(t.model, "fs");
    EXPECT_EQ(t.fingerprint, program_fingerprint(*p));
    std::istringstream lines(rec.text);
    std::string line;
    std::getline(lines, line);  // init
    for (std::size_t i = 0; i < t.records.size(); ++i) {
      std::getline(lines, line);
      EXPECT_EQ(record_to_json(*p, t.records[i]), line);
      EXPECT_EQ(t.records[i].verdict, rec.verdicts[i]);
    }
    EXPECT_EQ(replay(p, t), rec.verdicts);
  }
}

TEST(Trace, ViolationsReplayUnderRecordPolicy) {
  ServiceBinding lying = correct_fs();
  ExternFn base = lying.routine("os_read");
  lying.bind("os_read", [base](std::vector<Value>& a) {
    Value r = base(a);
    if (r.as_int() > 0) a[1].mutable_bytes()[0] ^= 1;
    return r;
  });
  Recorded rec = record_workload(lying, 11, ViolationPolicy::Record);
  const bool any_violation = std::any_of(rec.verdicts.begin(), rec.verdicts.end(),
                                         [](const Verdict& v) { return v.outcome == Verdict::Outcome::Violation; });
  ASSERT_TRUE(any_violation);
  auto p = test::fs_model();
  std::istringstream in(rec.text);
  Trace t = read_trace(*p, in);
  EXPECT_EQ(t.policy, ViolationPolicy::Record);
  EXPECT_EQ(replay(p, t), rec.verdicts);
}

ErrorCode parse_error(const std::string& text, ProgramPtr p = test::fs_model()) {
  std::istringstream in(text);
  try {
    read_trace(*p, in);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

TEST(Trace, MalformedInputIsCorrupt) {
  const std::string good = record_workload(correct_fs(), 1, ViolationPolicy::Abort).text;
  EXPECT_EQ(parse_error(""), ErrorCode::CorruptTrace);
  EXPECT_EQ(parse_error("not json\n"), ErrorCode::CorruptTrace);
  // Records before the init event.
  const auto first_nl = good.find('\n');
  const std::string second = good.substr(first_nl + 1, good.find('\n', first_nl + 1) - first_nl);
  EXPECT_EQ(parse_error(second), ErrorCode::CorruptTrace);
  // A line cut in half.
  EXPECT_EQ(parse_error(good.substr(0, good.size() - 20) + "\n"), ErrorCode::CorruptTrace);
  // A record naming an action the model lacks.
  std::string renamed = good;
  renamed.replace(renamed.find("\"action\":\"open\""), 15, "\"action\":\"opn\"");
  EXPECT_EQ(parse_error(renamed), ErrorCode::CorruptTrace);
}

TEST(Trace, TruncatedFileIsCorrupt) {
  const std::string good = record_workload(correct_fs(), 2, ViolationPolicy::Abort).text;
  const auto path = std::filesystem::temp_directory_path() / "gk_truncated_trace.jsonl";
  {
    std::ofstream f(path, std::ios::binary);
    f << good.substr(0, good.size() - 1);  // drop the final newline
  }
  auto p = test::fs_model();
  try {
    read_trace_file(*p, path.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptTrace);
  }
  {
    std::ofstream f(path, std::ios::binary);
    f << good;
  }
  EXPECT_EQ(read_trace_file(*p, path.string()).records.size(), 60u);
  std::filesystem::remove(path);
  EXPECT_THROW(read_trace_file(*p, path.string()), Error);
}

TEST(Trace, VersionAndModelMismatch) {
  std::string good = record_workload(correct_fs(), 3, ViolationPolicy::Abort).text;
  std::string bumped = good;
  const std::string v = "\"version\":" + std::to_string(kTraceVersion);
  bumped.replace(bumped.find(v), v.size(), "\"version\":" + std::to_string(kTraceVersion + 1));
  EXPECT_EQ(parse_error(bumped), ErrorCode::TraceVersionMismatch);

  // Any change to the model's canonical text changes the fingerprint.
  std::string src(bundled_model_source("fs"));
  src.replace(src.find("requires (nw == cnt);"), 21, "requires (nw <= cnt);");
  auto edited = compile(src, "fs");
  EXPECT_NE(program_fingerprint(*edited), program_fingerprint(*test::fs_model()));
  EXPECT_EQ(parse_error(good, edited), ErrorCode::TraceVersionMismatch);
}

TEST(Trace, InitSnapshotCarriesOverrides) {
  std::stringstream ss;
  ValidatorOptions opts;
  opts.trace = std::make_shared<TraceWriter>(ss);
  opts.init_overrides = {{"proc_state", {I(0)}, "umask", I(077)}};
  ValidatorSession v(test::fs_model(), correct_fs(), opts);
  Trace t = read_trace(*test::fs_model(), ss);
  EXPECT_EQ(t.init, v.state().snapshot());
  EXPECT_TRUE(t.records.empty());
}

}  // namespace
}  // namespace gk

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <random>
#include <thread>

#include "gatekeeper/error.hpp"
#include "gatekeeper/mock.hpp"
#include "gatekeeper/validator.hpp"
#include "support.hpp"

namespace gk {
namespace {

using test::Buf;
using test::C;
using test::Cl;
using test::I;
using test::S;

std::vector<std::string> verdict_strings(std::uint64_t seed) {
  MockSession m(test::fs_model(), {seed, nullptr, true, {}});
  std::vector<std::string> out;
  for (int i = 0; i < 4; ++i) {
    Verdict o = m.invoke("open", {S("/f" + std::to_string(i)), I(Cl("O_CREAT") | Cl("O_RDWR")), I(0644)});
    out.push_back(o.to_string());
    out.push_back(m.invoke("write", {o.ret, Buf(8, 'a'), I(8)}).to_string());
  }
  return out;
}

TEST(Mock, SameSeedSameRun) {
  EXPECT_EQ(verdict_strings(5), verdict_strings(5));
  bool differs = false;
  for (std::uint64_t s = 6; s < 12 && !differs; ++s) differs = verdict_strings(s) != verdict_strings(5);
  EXPECT_TRUE(differs);
}

TEST(Mock, ReadsComeFromModelState) {
  MockSession m(test::fs_model());
  Verdict o = m.invoke("open", {S("/f"), I(Cl("O_CREAT") | Cl("O_RDWR")), I(0644)});
  ASSERT_TRUE(o.ok());
  ASSERT_GE(o.ret.as_int(), 0);
  std::vector<Value> w = {o.ret, Value::bytes({'a', 'b', 'c'}), I(3)};
  EXPECT_EQ(m.mock_invoke("write", w).as_int(), 3);
  std::vector<Value> r = {o.ret, Buf(8), I(8), I(1)};
  EXPECT_EQ(m.mock_invoke("pread", r).as_int(), 2);
  EXPECT_EQ(r[1].as_bytes()[0], 'b');
  EXPECT_EQ(r[1].as_bytes()[1], 'c');
  // Pre-call returns are taken directly.
  EXPECT_EQ(m.invoke("close", {I(-1)}).ret.as_int(), -C("EBADF"));
}

// Differential property: on random workloads the mock agrees with the
// correct in-memory service everywhere the model leaves no freedom, and
// every descriptor it hands out is fresh.
TEST(Mock, MatchesCorrectServiceOnRandomWorkloads) {
  const std::vector<std::string> paths = {"/a", "/b", "/d", "/d/x", "rel"};
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    std::mt19937_64 rng(seed);
    ValidatorSession real(test::fs_model(), correct_fs());
    MockSession mock(test::fs_model(), {seed, nullptr, true, {}});
    std::vector<std::pair<Value, Value>> fds;  // (mock, real)
    auto path = [&] { return S(paths[rng() % paths.size()]); };
    for (int step = 0; step < 150; ++step) {
      const int op = static_cast<int>(rng() % 12);
      std::string action;
      std::vector<Value> ma, ra;
      const std::uint64_t pick = rng();
      auto both = [&](std::vector<Value> common_tail, bool with_fd) {
        if (with_fd) {
          const std::size_t saved = fds.empty() ? 0 : pick % fds.size();
          const bool invalid = fds.empty() || pick % 9 == 0;
          ma = {invalid ? I(-1) : fds[saved].first};
          ra = {invalid ? I(-1) : fds[saved].second};
        }
        ma.insert(ma.end(), common_tail.begin(), common_tail.end());
        ra.insert(ra.end(), common_tail.begin(), common_tail.end());
      };
      const long long cnt = static_cast<long long>(rng() % 12);
      switch (op) {
        case 0: {
          action = "open";
          static const long long acc[] = {0, 1, 2};
          long long flags = acc[rng() % 3];
          if (rng() % 2) flags |= Cl("O_CREAT");
          if (rng() % 4 == 0) flags |= Cl("O_TRUNC");
          if (rng() % 6 == 0) flags |= Cl("O_EXCL");
          if (rng() % 6 == 0) flags |= Cl("O_APPEND");
          both({path(), I(flags), I(0644)}, false);
          break;
        }
        case 1: action = "close"; both({}, true); break;
        case 2: action = "read"; both({Buf(16), I(cnt)}, true); break;
        case 3: action = "pread"; both({Buf(16), I(cnt), I(static_cast<long long>(rng() % 10))}, true); break;
        case 4: action = "write"; both({Buf(16, static_cast<std::uint8_t>('a' + step % 26)), I(cnt)}, true); break;
        case 5: action = "pwrite"; both({Buf(16, 'z'), I(cnt), I(static_cast<long long>(rng() % 10))}, true); break;
        case 6: action = "lseek"; both({I(static_cast<long long>(rng() % 8)), I(static_cast<long long>(rng() % 3))}, true); break;
        case 7: action = "fstat"; both({}, true); break;
        case 8: action = "lstat"; both({path()}, false); break;
        case 9: action = "mkdir"; both({S("/d"), I(0755)}, false); break;
        case 10: action = "ftruncate"; both({I(static_cast<long long>(rng() % 6))}, true); break;
        default: action = "unlink"; both({path()}, false); break;
      }
      Verdict rv = real.invoke(action, ra);
      ASSERT_TRUE(rv.ok()) << action << ": " << rv.to_string();
      Verdict mv = mock.invoke(action, ma);
      ASSERT_TRUE(mv.ok()) << action << ": " << mv.to_string();
      if (action == "open") {
        ASSERT_EQ(mv.ret.as_int() >= 0, rv.ret.as_int() >= 0) << "seed " << seed << " step " << step;
        if (rv.ret.as_int() >= 0) {
          for (const auto& p : fds) ASSERT_NE(p.first, mv.ret) << "mock reused a live descriptor";
          fds.push_back({mv.ret, rv.ret});
        } else {
          EXPECT_EQ(mv.ret, rv.ret);
        }
        continue;
      }
      ASSERT_EQ(mv.ret, rv.ret) << action << " seed " << seed << " step " << step;
      if (action == "close" && rv.ret.as_int() == 0) {
        std::erase_if(fds, [&](const auto& p) { return p.second == ra[0]; });
      }
      if ((action == "read" || action == "pread") && rv.ret.as_int() > 0) {
        const auto n = static_cast<std::size_t>(rv.ret.as_int());
        const auto& mb = mv.outputs.at("buf").as_bytes();
        const auto& rb = rv.outputs.at("buf").as_bytes();
        ASSERT_TRUE(std::equal(mb.begin(), mb.begin() + n, rb.begin()));
      }
    }
  }
}

TEST(Mock, PreconditionFailureIsAModelError) {
  MockSession m(test::sync_model());
  ASSERT_TRUE(m.invoke("mutex_init", {I(1), I(Cl("MUTEX_NORMAL"))}).ok());
  ASSERT_TRUE(m.invoke("mutex_lock", {I(1), I(7)}).ok());
  Verdict relock = m.invoke("mutex_lock", {I(1), I(7)});
  ASSERT_EQ(relock.outcome, Verdict::Outcome::ModelError);
  EXPECT_EQ(relock.error_code, ErrorCode::PreconditionFailed);
  std::vector<Value> args = {I(1), I(7)};
  try {
    m.mock_invoke("mutex_lock", args);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionFailed);
  }
}

TEST(Mock, UnsatisfiableCallSite) {
  auto p = compile(R"(
Map m(k: int) returns (v: int);
action a(x: int) returns (r: int) := {
  r := extern call f(x);
  requires (r > x and r < x);
}
)");
  MockSession m(p);
  Verdict v = m.invoke("a", {I(1)});
  ASSERT_EQ(v.outcome, Verdict::Outcome::ModelError);
  EXPECT_EQ(v.error_code, ErrorCode::ModelUnsat);
}

TEST(Mock, PrefersSuccessButHonorsErrors) {
  auto p = compile(R"(
Map m(k: int) returns (v: int);
action a(x: int) returns (r: int) := {
  r := extern call f(x);
  requires (r == -1 or r == 4);
}
)");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    MockSession m(p, {seed, nullptr, true, {}});
    EXPECT_EQ(m.invoke("a", {I(0)}).ret.as_int(), 4);
  }
  bool saw_error = false;
  for (std::uint64_t seed = 0; seed < 40 && !saw_error; ++seed) {
    MockSession m(p, {seed, nullptr, false, {}});
    const WideInt r = m.invoke("a", {I(0)}).ret.as_int();
    EXPECT_TRUE(r == -1 || r == 4);
    saw_error = r == -1;
  }
  EXPECT_TRUE(saw_error);
}

TEST(Mock, AwaitBlocksUntilAnotherThreadReleases) {
  MockSession m(test::sync_model());
  ASSERT_TRUE(m.invoke("mutex_init", {I(1), I(Cl("MUTEX_NORMAL"))}).ok());
  ASSERT_TRUE(m.invoke("mutex_lock", {I(1), I(1)}).ok());
  std::atomic<bool> acquired{false};
  std::thread t([&] {
    EXPECT_TRUE(m.invoke("mutex_lock", {I(1), I(2)}).ok());
    acquired = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  EXPECT_FALSE(acquired.load());
  ASSERT_TRUE(m.invoke("mutex_unlock", {I(1), I(1)}).ok());
  t.join();
  EXPECT_TRUE(acquired.load());
  EXPECT_EQ(m.state().get_field("mutex_state", {I(1)}, "owner")->as_int(), 2);
}

TEST(Mock, ValidatorOverMockNeverViolates) {
  auto p = test::fs_model();
  auto mock = std::make_shared<MockSession>(p, MockOptions{3, nullptr, true, {}});
  ValidatorSession v(p, mock_binding(mock));
  Verdict o = v.invoke("open", {S("/f"), I(Cl("O_CREAT") | Cl("O_RDWR")), I(0644)});
  ASSERT_TRUE(o.ok()) << o.to_string();
  EXPECT_TRUE(v.invoke("write", {o.ret, Buf(10, 'q'), I(10)}).ok());
  EXPECT_TRUE(v.invoke("lseek", {o.ret, I(0), I(Cl("SEEK_SET"))}).ok());
  Verdict r = v.invoke("read", {o.ret, Buf(20), I(20)});
  ASSERT_TRUE(r.ok()) << r.to_string();
  EXPECT_EQ(r.ret.as_int(), 10);
  EXPECT_EQ(r.outputs.at("buf").as_bytes()[9], 'q');
  EXPECT_EQ(v.state().snapshot(), mock->state().snapshot());
}

}  // namespace
}  // namespace gk

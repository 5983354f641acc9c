#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <random>
#include <thread>

#include "gatekeeper/error.hpp"
#include "gatekeeper/frontend.hpp"
#include "gatekeeper/state.hpp"

namespace gk {
namespace {

std::vector<MapDecl> decls() {
  auto p = compile(R"(
Map cnt(k: int) returns (v: int, w: off_t);
Map names(p: string, q: int) returns (ino: int, data: char[]);
action a(x: int) returns (r: int) := { r := extern call f(x); }
)");
  return p->program.maps;
}

TEST(StateStore, AbsentEntriesAreNull) {
  StateStore s(decls());
  EXPECT_TRUE(s.get("cnt", {Value::wide(1)}).is_null());
  EXPECT_FALSE(s.get_field("cnt", {Value::wide(1)}, "v").has_value());
  s.set("cnt", {Value::wide(1)}, "w", Value::wide(5));
  // A set allocates the whole record zeroed.
  EXPECT_EQ(s.get_field("cnt", {Value::wide(1)}, "v")->as_int(), 0);
  EXPECT_EQ(s.get_field("cnt", {Value::wide(1)}, "w")->as_int(), 5);
  s.erase("cnt", {Value::wide(1)});
  s.erase("cnt", {Value::wide(1)});
  EXPECT_FALSE(s.contains("cnt", {Value::wide(1)}));
}

TEST(StateStore, SchemaErrors) {
  StateStore s(decls());
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code([&] { s.get("nope", {Value::wide(1)}); }), ErrorCode::UnknownMap);
  EXPECT_EQ(code([&] { s.get("cnt", {Value::wide(1), Value::wide(2)}); }), ErrorCode::KeyArityMismatch);
  EXPECT_EQ(code([&] { s.set("cnt", {Value::wide(1)}, "zz", Value::wide(1)); }), ErrorCode::UnknownField);
  EXPECT_EQ(code([&] { s.set("cnt", {Value::wide(1)}, "v", Value::wide(WideInt(1) << 40)); }), ErrorCode::RangeError);
  EXPECT_EQ(code([&] { s.set("cnt", {Value::wide(1)}, "v", Value::str("x")); }), ErrorCode::TypeMismatch);
}

// Property: a random operation sequence leaves the store equal to a
// std::map oracle, and keys() is the oracle's sorted key list.
TEST(StateStore, MatchesMapOracle) {
  StateStore s(decls());
  std::map<long long, std::pair<long long, long long>> oracle;
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 5000; ++i) {
    const long long k = static_cast<long long>(rng() % 64) - 32;
    const long long v = static_cast<long long>(rng() % 1000) - 500;
    switch (rng() % 4) {
      case 0:
      case 1:
        s.set("cnt", {Value::wide(k)}, "v", Value::wide(v));
        oracle[k].first = v;
        break;
      case 2:
        s.set("cnt", {Value::wide(k)}, "w", Value::wide(v));
        oracle[k].second = v;
        break;
      case 3:
        s.erase("cnt", {Value::wide(k)});
        oracle.erase(k);
        break;
    }
  }
  ASSERT_EQ(s.size("cnt"), oracle.size());
  auto keys = s.keys("cnt");
  auto it = oracle.begin();
  for (const auto& key : keys) {
    ASSERT_EQ(key[0].as_int(), it->first);
    EXPECT_EQ(s.get_field("cnt", key, "v")->as_int(), it->second.first);
    EXPECT_EQ(s.get_field("cnt", key, "w")->as_int(), it->second.second);
    ++it;
  }
}

TEST(StateStore, SnapshotRestoreAndJson) {
  StateStore s(decls());
  s.set("names", {Value::str("/a"), Value::wide(1)}, "ino", Value::wide(4));
  s.set("names", {Value::str("/a"), Value::wide(1)}, "data", Value::bytes({1, 2, 3}));
  s.set("cnt", {Value::wide(-9)}, "w", Value::wide(WideInt(1) << 40));
  const StateSnapshot snap = s.snapshot();
  const std::string json = s.snapshot_json();

  s.clear();
  EXPECT_EQ(s.size("names"), 0u);
  s.restore(snap);
  EXPECT_EQ(s.snapshot(), snap);
  EXPECT_EQ(s.snapshot_json(), json);

  StateSnapshot parsed = StateStore::snapshot_from_json(decls(), json);
  EXPECT_EQ(parsed, snap);
}

// Property: code inside with_entry_lock on the same map never interleaves.
TEST(StateStore, AtomicBlocksAreMutuallyExclusive) {
  StateStore s(decls());
  std::atomic<int> inside{0};
  std::atomic<bool> overlap{false};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 2000; ++i) {
        s.with_entry_lock("cnt", [&] {
          if (inside.fetch_add(1) != 0) overlap = true;
          auto cur = s.get_field("cnt", {Value::wide(0)}, "v");
          s.set("cnt", {Value::wide(0)}, "v", Value::wide((cur ? cur->as_int() : 0) + 1));
          inside.fetch_sub(1);
        });
      }
      (void)t;
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_FALSE(overlap);
  EXPECT_EQ(s.get_field("cnt", {Value::wide(0)}, "v")->as_int(), 8000);
}

TEST(StateStore, WaitUntilWakesOnWrite) {
  StateStore s(decls());
  std::thread writer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    s.with_entry_lock("cnt", [&] { s.set("cnt", {Value::wide(1)}, "v", Value::wide(1)); });
  });
  AtomicLock lock = s.lock_atomic("cnt");
  lock.wait_until([&] { return s.contains("cnt", {Value::wide(1)}); });
  EXPECT_TRUE(s.contains("cnt", {Value::wide(1)}));
  writer.join();
}

}  // namespace
}  // namespace gk

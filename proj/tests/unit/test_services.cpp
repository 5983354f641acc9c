#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <thread>

#include "gatekeeper/error.hpp"
#include "gatekeeper/service.hpp"
#include "support.hpp"

namespace gk {
namespace {

using test::Buf;
using test::C;
using test::Cl;
using test::I;
using test::S;

long long call(const ServiceBinding& b, std::string_view fn, std::vector<Value>& args) {
  return static_cast<long long>(b.call(fn, args).as_int());
}
long long call(const ServiceBinding& b, std::string_view fn, std::vector<Value>&& args) { return call(b, fn, args); }

// Reference file system: inodes are shared strings so unlinked files stay
// readable through open descriptors.
struct OracleFs {
  std::map<std::string, std::shared_ptr<std::string>> names;
  struct Fd {
    std::shared_ptr<std::string> file;
    long long off = 0;
  };
  std::map<int, Fd> fds;

  int open(const std::string& p) {
    auto& f = names[p];
    if (!f) f = std::make_shared<std::string>();
    int fd = 3;
    while (fds.count(fd)) ++fd;
    fds[fd] = {f, 0};
    return fd;
  }
  long long write(int fd, const std::string& data) {
    auto it = fds.find(fd);
    if (it == fds.end()) return -Cl("EBADF");
    auto& f = *it->second.file;
    const auto off = static_cast<std::size_t>(it->second.off);
    if (f.size() < off + data.size()) f.resize(off + data.size(), '\0');
    f.replace(off, data.size(), data);
    it->second.off += static_cast<long long>(data.size());
    return static_cast<long long>(data.size());
  }
  std::pair<long long, std::string> pread(int fd, std::size_t cnt, std::size_t off) {
    auto it = fds.find(fd);
    if (it == fds.end()) return {-Cl("EBADF"), ""};
    const auto& f = *it->second.file;
    if (off >= f.size()) return {0, ""};
    std::string s = f.substr(off, cnt);
    return {static_cast<long long>(s.size()), s};
  }
};

// Oracle property: random open/write/pread/close/unlink/rename/ftruncate
// sequences leave MemFs observably equal to the reference.
TEST(CorrectFs, MatchesReferenceFileSystem) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ServiceBinding fs = correct_fs();
    OracleFs ref;
    std::mt19937_64 rng(seed);
    const std::vector<std::string> paths = {"/a", "/b", "/c"};
    for (int step = 0; step < 300; ++step) {
      const std::string p = paths[rng() % paths.size()];
      std::vector<int> live;
      for (const auto& [fd, _] : ref.fds) live.push_back(fd);
      const int fd = live.empty() || rng() % 10 == 0 ? 99 : live[rng() % live.size()];
      switch (rng() % 7) {
        case 0: {
          const long long got = call(fs, "os_open", {S(p), I(Cl("O_CREAT") | Cl("O_RDWR")), I(0644)});
          ASSERT_EQ(got, ref.open(p));
          break;
        }
        case 1: {
          std::string data(1 + rng() % 7, static_cast<char>('a' + rng() % 26));
          std::vector<Value> a = {I(fd), Value::bytes({data.begin(), data.end()}), I(static_cast<long long>(data.size()))};
          ASSERT_EQ(call(fs, "os_write", a), ref.write(fd, data));
          break;
        }
        case 2: {
          const std::size_t cnt = rng() % 10, off = rng() % 12;
          std::vector<Value> a = {I(fd), Buf(16), I(static_cast<long long>(cnt)), I(static_cast<long long>(off))};
          const long long got = call(fs, "os_pread", a);
          auto [want, bytes] = ref.pread(fd, cnt, off);
          ASSERT_EQ(got, want);
          for (std::size_t i = 0; i < bytes.size(); ++i) ASSERT_EQ(a[1].as_bytes()[i], static_cast<std::uint8_t>(bytes[i]));
          break;
        }
        case 3: {
          const long long want = ref.fds.erase(fd) ? 0 : -Cl("EBADF");
          ASSERT_EQ(call(fs, "os_close", {I(fd)}), want);
          break;
        }
        case 4: {
          const long long want = ref.names.erase(p) ? 0 : -Cl("ENOENT");
          ASSERT_EQ(call(fs, "os_unlink", {S(p)}), want);
          break;
        }
        case 5: {
          const std::string q = paths[rng() % paths.size()];
          long long want = -Cl("ENOENT");
          if (ref.names.count(p)) {
            want = 0;
            auto f = ref.names[p];
            ref.names.erase(p);
            ref.names[q] = f;
          }
          ASSERT_EQ(call(fs, "os_rename", {S(p), S(q)}), want);
          break;
        }
        default: {
          const long long len = static_cast<long long>(rng() % 6);
          long long want = -Cl("EBADF");
          if (auto it = ref.fds.find(fd); it != ref.fds.end()) {
            it->second.file->resize(static_cast<std::size_t>(len), '\0');
            want = 0;
          }
          ASSERT_EQ(call(fs, "os_ftruncate", {I(fd), I(len)}), want);
          break;
        }
      }
      for (const auto& [name, f] : ref.names) {
        ASSERT_EQ(call(fs, "os_lstat", {S(name)}), static_cast<long long>(f->size())) << name;
      }
    }
  }
}

TEST(CorrectFs, DescriptorsAreLowestFree) {
  ServiceBinding fs = correct_fs();
  const auto flags = I(Cl("O_CREAT") | Cl("O_RDWR"));
  EXPECT_EQ(call(fs, "os_open", {S("/a"), flags, I(0644)}), 3);
  EXPECT_EQ(call(fs, "os_open", {S("/b"), flags, I(0644)}), 4);
  EXPECT_EQ(call(fs, "os_close", {I(3)}), 0);
  EXPECT_EQ(call(fs, "os_open", {S("/c"), flags, I(0644)}), 3);
  EXPECT_EQ(call(fs, "os_open", {S("/nope/x"), flags, I(0644)}), -C("ENOENT"));
  EXPECT_EQ(fs.calls(), 5u);
}

TEST(CorrectSync, LockBlocksUntilUnlock) {
  ServiceBinding s = correct_sync();
  ASSERT_EQ(call(s, "sys_mutex_init", {I(1), I(Cl("MUTEX_NORMAL"))}), 0);
  ASSERT_EQ(call(s, "sys_mutex_lock", {I(1), I(1)}), 0);
  EXPECT_EQ(call(s, "sys_mutex_trylock", {I(1), I(2)}), -C("EBUSY"));
  std::atomic<bool> got{false};
  std::thread t([&] {
    EXPECT_EQ(call(s, "sys_mutex_lock", {I(1), I(2)}), 0);
    got = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  EXPECT_FALSE(got.load());
  EXPECT_EQ(call(s, "sys_mutex_unlock", {I(1), I(1)}), 0);
  t.join();
  EXPECT_TRUE(got.load());
}

TEST(CorrectSync, FutexWaitAndWake) {
  ServiceBinding s = correct_sync();
  ASSERT_EQ(call(s, "sys_futex_init", {I(5), I(0)}), 0);
  EXPECT_EQ(call(s, "sys_futex_wait", {I(5), I(1)}), -C("EAGAIN"));
  std::atomic<bool> woke{false};
  std::thread t([&] {
    EXPECT_EQ(call(s, "sys_futex_wait", {I(5), I(0)}), 0);
    woke = true;
  });
  long long n = 0;
  for (int i = 0; i < 500 && n == 0; ++i) {
    n = call(s, "sys_futex_wake", {I(5), I(4)});
    if (n == 0) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  EXPECT_EQ(n, 1);
  t.join();
  EXPECT_TRUE(woke.load());
  EXPECT_EQ(call(s, "sys_futex_wake", {I(5), I(4)}), 0);
}

TEST(Adversaries, CatalogIsComplete) {
  const auto& cat = adversary_catalog();
  ASSERT_EQ(cat.size(), 7u);
  std::set<std::string> ids;
  for (const auto& v : cat) {
    ids.insert(v.id);
    EXPECT_TRUE(v.model == "fs" || v.model == "sync");
    EXPECT_FALSE(v.description.empty());
    ServiceBinding base = v.model == "fs" ? correct_fs() : correct_sync();
    ServiceBinding a = adversary(base, v.id);
    EXPECT_EQ(a.functions(), base.functions());
    EXPECT_NE(a.name().find(v.id), std::string::npos);
  }
  EXPECT_EQ(ids.size(), 7u);
  try {
    adversary(correct_fs(), "SLOW_LORIS");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownVariant);
  }
}

TEST(Adversaries, MisbehaveAsDescribed) {
  const auto flags = I(Cl("O_CREAT") | Cl("O_RDWR"));
  {
    ServiceBinding a = adversary(correct_fs(), "SHORT_READ_LIE");
    const long long fd = call(a, "os_open", {S("/f"), flags, I(0644)});
    call(a, "os_write", {I(fd), Buf(5, 'x'), I(5)});
    call(a, "os_lseek", {I(fd), I(0), I(Cl("SEEK_SET"))});
    EXPECT_EQ(call(a, "os_read", {I(fd), Buf(16), I(16)}), 6);
  }
  {
    ServiceBinding a = adversary(correct_fs(), "WRONG_DATA");
    const long long fd = call(a, "os_open", {S("/f"), flags, I(0644)});
    call(a, "os_write", {I(fd), Buf(5, 'x'), I(5)});
    call(a, "os_lseek", {I(fd), I(0), I(Cl("SEEK_SET"))});
    std::vector<Value> r = {I(fd), Buf(16), I(16)};
    EXPECT_EQ(call(a, "os_read", r), 5);
    EXPECT_EQ(r[1].as_bytes()[0], 'x' ^ 0xff);
  }
  {
    ServiceBinding a = adversary(correct_fs(), "PHANTOM_SUCCESS");
    const long long fd = call(a, "os_open", {S("/f"), flags, I(0644)});
    EXPECT_EQ(call(a, "os_write", {I(fd), Buf(5, 'x'), I(5)}), 5);
    EXPECT_EQ(call(a, "os_fstat", {I(fd)}), 0);
  }
  {
    ServiceBinding a = adversary(correct_fs(), "FD_CONFUSION");
    const long long first = call(a, "os_open", {S("/f"), flags, I(0644)});
    EXPECT_EQ(call(a, "os_open", {S("/g"), flags, I(0644)}), first);
  }
  {
    ServiceBinding a = adversary(correct_fs(), "RENAME_ALIAS");
    call(a, "os_open", {S("/f"), flags, I(0644)});
    EXPECT_EQ(call(a, "os_rename", {S("/f"), S("/g")}), 0);
    EXPECT_EQ(call(a, "os_lstat", {S("/f")}), 0);  // still resolves
  }
  {
    ServiceBinding a = adversary(correct_sync(), "OVER_WAKE");
    call(a, "sys_futex_init", {I(1), I(0)});
    EXPECT_EQ(call(a, "sys_futex_wake", {I(1), I(3)}), 1);
  }
  {
    ServiceBinding a = adversary(correct_sync(), "DOUBLE_LOCK_GRANT");
    call(a, "sys_mutex_init", {I(1), I(Cl("MUTEX_NORMAL"))});
    EXPECT_EQ(call(a, "sys_mutex_lock", {I(1), I(1)}), 0);
    EXPECT_EQ(call(a, "sys_mutex_lock", {I(1), I(2)}), 0);  // granted while held
  }
}

TEST(ServiceBinding, InjectorRewritesAndCountsAreShared) {
  ServiceBinding b("t");
  b.bind("f", [](std::vector<Value>& a) { return a[0]; });
  ServiceBinding copy = b;
  b.set_fault_injector([](const CallInfo& c, std::vector<Value>&, Value& ret) {
    if (c.index == 1) ret = I(-1);
  });
  std::vector<Value> a = {I(7)};
  EXPECT_EQ(b.call("f", a).as_int(), 7);
  EXPECT_EQ(b.call("f", a).as_int(), -1);
  EXPECT_EQ(copy.call("f", a).as_int(), 7);
  EXPECT_EQ(copy.calls(), 3u);
  EXPECT_THROW(b.call("g", a), Error);
  EXPECT_THROW(b.require_complete(*test::fs_model()), Error);
}

}  // namespace
}  // namespace gk

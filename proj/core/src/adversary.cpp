// Each variant misbehaves once (the first time its trigger matches) and
// otherwise forwards to the base binding.

#include <atomic>
#include <algorithm>
#include <memory>

#include "gatekeeper/error.hpp"
#include "gatekeeper/frontend.hpp"
#include "gatekeeper/service.hpp"

namespace gk {

namespace {

WideInt C(std::string_view name) { return *builtin_constant(name); }

struct Shot {
  std::atomic<bool> fired{false};
  /// True exactly once.
  bool take() { return !fired.exchange(true); }
};

}  // namespace

const std::vector<AdversaryVariant>& adversary_catalog() {
  static const std::vector<AdversaryVariant> kCatalog = {
      {"FD_CONFUSION", "fs", "a later successful open returns the descriptor of the first open file"},
      {"SHORT_READ_LIE", "fs", "read reports one byte more than it copied"},
      {"WRONG_DATA", "fs", "read flips the first byte it copied"},
      {"PHANTOM_SUCCESS", "fs", "write reports success without storing anything"},
      {"DOUBLE_LOCK_GRANT", "sync", "lock returns immediately while another thread holds the mutex"},
      {"OVER_WAKE", "sync", "futex wake reports one more woken thread than it woke"},
      {"RENAME_ALIAS", "fs", "rename keeps the old name resolving to the file"},
  };
  return kCatalog;
}

ServiceBinding adversary(const ServiceBinding& base, std::string_view variant) {
  const auto& cat = adversary_catalog();
  auto it = std::find_if(cat.begin(), cat.end(), [&](const AdversaryVariant& v) { return v.id == variant; });
  if (it == cat.end()) throw Error(ErrorCode::UnknownVariant, "unknown adversary variant '" + std::string(variant) + "'");

  ServiceBinding b = base;
  b.set_name(base.name() + "+" + it->id);
  auto shot = std::make_shared<Shot>();
  const std::string id = it->id;

  if (id == "FD_CONFUSION") {
    ExternFn open = base.routine("os_open");
    auto first = std::make_shared<std::atomic<std::int64_t>>(-1);
    b.bind("os_open", [open, first, shot](std::vector<Value>& a) {
      Value r = open(a);
      if (r.as_int() < 0) return r;
      if (first->load() < 0) {
        first->store(static_cast<std::int64_t>(r.as_int()));
        return r;
      }
      return shot->take() ? Value::wide(first->load()) : r;
    });
  } else if (id == "SHORT_READ_LIE") {
    ExternFn read = base.routine("os_read");
    b.bind("os_read", [read, shot](std::vector<Value>& a) {
      Value r = read(a);
      if (r.as_int() >= 0 && shot->take()) return Value::wide(r.as_int() + 1);
      return r;
    });
  } else if (id == "WRONG_DATA") {
    ExternFn read = base.routine("os_read");
    b.bind("os_read", [read, shot](std::vector<Value>& a) {
      Value r = read(a);
      if (r.as_int() > 0 && shot->take()) a[1].mutable_bytes()[0] ^= 0xff;
      return r;
    });
  } else if (id == "PHANTOM_SUCCESS") {
    ExternFn write = base.routine("os_write");
    b.bind("os_write", [write, shot](std::vector<Value>& a) {
      if (a[2].as_int() > 0 && static_cast<WideInt>(a[1].as_bytes().size()) >= a[2].as_int() && shot->take()) {
        return Value::wide(a[2].as_int());
      }
      return write(a);
    });
  } else if (id == "DOUBLE_LOCK_GRANT") {
    ExternFn lock = base.routine("sys_mutex_lock");
    ExternFn trylock = base.routine("sys_mutex_trylock");
    b.bind("sys_mutex_lock", [lock, trylock, shot](std::vector<Value>& a) {
      if (!shot->fired.load()) {
        std::vector<Value> probe = a;
        Value r = trylock(probe);
        if (r.as_int() == 0) return r;
        if (r.as_int() == -C("EBUSY") && shot->take()) return Value::wide(0);
      }
      return lock(a);
    });
  } else if (id == "OVER_WAKE") {
    ExternFn wake = base.routine("sys_futex_wake");
    b.bind("sys_futex_wake", [wake, shot](std::vector<Value>& a) {
      Value r = wake(a);
      if (r.as_int() >= 0 && shot->take()) return Value::wide(r.as_int() + 1);
      return r;
    });
  } else if (id == "RENAME_ALIAS") {
    ExternFn rename = base.routine("os_rename");
    ExternFn link = base.routine("host_link");
    b.bind("os_rename", [rename, link, shot](std::vector<Value>& a) {
      Value r = rename(a);
      if (r.as_int() == 0 && a[0].as_str() != a[1].as_str() && shot->take()) {
        std::vector<Value> back = {a[1], a[0]};
        link(back);
      }
      return r;
    });
  }
  b.retain(shot);
  return b;
}

}  // namespace gk

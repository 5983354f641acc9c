// Host-side mutexes and futexes behind the sync model's externs. A single
// monitor guards the object tables; each object has its own condition
// variable for blocking.

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>

#include "gatekeeper/frontend.hpp"
#include "gatekeeper/service.hpp"

namespace gk {

namespace {

WideInt C(std::string_view name) { return *builtin_constant(name); }

class HostSync {
 public:
  WideInt mutex_init(WideInt id, WideInt kind) {
    std::lock_guard g(mu_);
    if (mutexes_.count(id) != 0) return -C("EBUSY");
    if (kind != C("MUTEX_NORMAL") && kind != C("MUTEX_ERRCHECK") && kind != C("MUTEX_RECURSIVE")) return -C("EINVAL");
    auto m = std::make_unique<Mutex>();
    m->kind = kind;
    mutexes_[id] = std::move(m);
    return 0;
  }

  WideInt mutex_destroy(WideInt id) {
    std::lock_guard g(mu_);
    auto it = mutexes_.find(id);
    if (it == mutexes_.end()) return -C("EINVAL");
    if (it->second->count > 0 || it->second->waiters > 0) return -C("EBUSY");
    mutexes_.erase(it);
    return 0;
  }

  WideInt mutex_lock(WideInt id, WideInt tid) {
    std::unique_lock g(mu_);
    Mutex* m = find(mutexes_, id);
    if (m == nullptr) return -C("EINVAL");
    if (m->count > 0 && m->owner == tid) {
      if (m->kind == C("MUTEX_ERRCHECK")) return -C("EDEADLK");
      if (m->kind == C("MUTEX_RECURSIVE")) {
        ++m->count;
        return 0;
      }
    }
    ++m->waiters;
    m->cv.wait(g, [&] { return m->count == 0; });
    --m->waiters;
    m->count = 1;
    m->owner = tid;
    return 0;
  }

  WideInt mutex_trylock(WideInt id, WideInt tid) {
    std::lock_guard g(mu_);
    Mutex* m = find(mutexes_, id);
    if (m == nullptr) return -C("EINVAL");
    if (m->count > 0) {
      if (m->kind == C("MUTEX_RECURSIVE") && m->owner == tid) {
        ++m->count;
        return 0;
      }
      return -C("EBUSY");
    }
    m->count = 1;
    m->owner = tid;
    return 0;
  }

  WideInt mutex_unlock(WideInt id, WideInt tid) {
    std::lock_guard g(mu_);
    Mutex* m = find(mutexes_, id);
    if (m == nullptr) return -C("EINVAL");
    if (m->count == 0 || (m->kind != C("MUTEX_NORMAL") && m->owner != tid)) return -C("EPERM");
    if (--m->count == 0) {
      m->owner = -1;
      m->cv.notify_one();
    }
    return 0;
  }

  WideInt futex_init(WideInt id, WideInt val) {
    std::lock_guard g(mu_);
    if (futexes_.count(id) != 0) return -C("EBUSY");
    if (val < 0) return -C("EINVAL");
    auto f = std::make_unique<Futex>();
    f->val = val;
    futexes_[id] = std::move(f);
    return 0;
  }

  WideInt futex_destroy(WideInt id) {
    std::lock_guard g(mu_);
    auto it = futexes_.find(id);
    if (it == futexes_.end()) return -C("EINVAL");
    if (it->second->waiting > 0 || it->second->tokens > 0) return -C("EBUSY");
    futexes_.erase(it);
    return 0;
  }

  WideInt futex_cmpxchg(WideInt id, WideInt expected, WideInt desired) {
    std::lock_guard g(mu_);
    Futex* f = find(futexes_, id);
    if (f == nullptr || desired < 0) return -C("EINVAL");
    const WideInt old = f->val;
    if (old == expected) f->val = desired;
    return old;
  }

  WideInt futex_wait(WideInt id, WideInt expected) {
    std::unique_lock g(mu_);
    Futex* f = find(futexes_, id);
    if (f == nullptr) return -C("EINVAL");
    if (f->val != expected) return -C("EAGAIN");
    ++f->waiting;
    f->cv.wait(g, [&] { return f->tokens > 0; });
    --f->tokens;
    return 0;
  }

  // Wakes up to n current waiters; the woken count is exact.
  WideInt futex_wake(WideInt id, WideInt n) {
    std::lock_guard g(mu_);
    Futex* f = find(futexes_, id);
    if (f == nullptr || n < 0) return -C("EINVAL");
    const WideInt woken = std::min(n, f->waiting);
    f->waiting -= woken;
    f->tokens += woken;
    if (woken > 0) f->cv.notify_all();
    return woken;
  }

 private:
  struct Mutex {
    WideInt kind = 0;
    WideInt owner = -1;
    WideInt count = 0;
    int waiters = 0;
    std::condition_variable cv;
  };
  struct Futex {
    WideInt val = 0;
    WideInt waiting = 0;  // blocked and not yet woken
    WideInt tokens = 0;   // wakeups granted, not yet consumed
    std::condition_variable cv;
  };

  template <class T>
  static T* find(std::map<WideInt, std::unique_ptr<T>>& m, WideInt id) {
    auto it = m.find(id);
    return it == m.end() ? nullptr : it->second.get();
  }

  std::mutex mu_;
  std::map<WideInt, std::unique_ptr<Mutex>> mutexes_;
  std::map<WideInt, std::unique_ptr<Futex>> futexes_;
};

Value W(WideInt v) { return Value::wide(v); }

}  // namespace

ServiceBinding correct_sync() {
  auto s = std::make_shared<HostSync>();
  ServiceBinding b("correct_sync");
  b.retain(s);
  auto* h = s.get();
  b.bind("sys_mutex_init", [h](std::vector<Value>& a) { return W(h->mutex_init(a[0].as_int(), a[1].as_int())); });
  b.bind("sys_mutex_destroy", [h](std::vector<Value>& a) { return W(h->mutex_destroy(a[0].as_int())); });
  b.bind("sys_mutex_lock", [h](std::vector<Value>& a) { return W(h->mutex_lock(a[0].as_int(), a[1].as_int())); });
  b.bind("sys_mutex_trylock", [h](std::vector<Value>& a) { return W(h->mutex_trylock(a[0].as_int(), a[1].as_int())); });
  b.bind("sys_mutex_unlock", [h](std::vector<Value>& a) { return W(h->mutex_unlock(a[0].as_int(), a[1].as_int())); });
  b.bind("sys_futex_init", [h](std::vector<Value>& a) { return W(h->futex_init(a[0].as_int(), a[1].as_int())); });
  b.bind("sys_futex_destroy", [h](std::vector<Value>& a) { return W(h->futex_destroy(a[0].as_int())); });
  b.bind("sys_futex_cmpxchg", [h](std::vector<Value>& a) {
    return W(h->futex_cmpxchg(a[0].as_int(), a[1].as_int(), a[2].as_int()));
  });
  b.bind("sys_futex_wait", [h](std::vector<Value>& a) { return W(h->futex_wait(a[0].as_int(), a[1].as_int())); });
  b.bind("sys_futex_wake", [h](std::vector<Value>& a) { return W(h->futex_wake(a[0].as_int(), a[1].as_int())); });
  return b;
}

}  // namespace gk

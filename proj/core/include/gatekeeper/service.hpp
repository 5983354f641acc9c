#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/frontend.hpp"
#include "gatekeeper/value.hpp"

namespace gk {

/// Host routine behind an extern name. Byte-array arguments are in/out.
using ExternFn = std::function<Value(std::vector<Value>& args)>;

struct CallInfo {
  std::uint64_t index = 0;  // 0-based count of calls through this binding
  std::string_view fn;
};

/// Runs after the routine; may rewrite its outputs.
using FaultInjector = std::function<void(const CallInfo&, std::vector<Value>& args, Value& ret)>;

/// Dispatch table from extern names to host routines. Copies share the
/// underlying service and call counter.
class ServiceBinding {
 public:
  ServiceBinding();
  explicit ServiceBinding(std::string name);

  void bind(std::string fn, ExternFn impl);
  bool has(std::string_view fn) const;
  /// The routine bound to `fn` (ServiceUnavailable when missing).
  const ExternFn& routine(std::string_view fn) const;
  std::vector<std::string> functions() const;

  /// Dispatches, counting the call and applying the injector.
  Value call(std::string_view fn, std::vector<Value>& args) const;

  void set_fault_injector(FaultInjector injector);
  std::uint64_t calls() const { return counter_->load(); }

  /// Throws ServiceUnavailable naming the first untrusted extern of
  /// `program` that has no routine.
  void require_complete(const TypedModelProgram& program) const;

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  /// Keeps an implementation object alive as long as any copy exists.
  void retain(std::shared_ptr<const void> owner) { owners_.push_back(std::move(owner)); }

 private:
  std::string name_;
  std::map<std::string, ExternFn, std::less<>> table_;
  FaultInjector injector_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
  std::vector<std::shared_ptr<const void>> owners_;
};

/// In-memory file system serving the FS model's externs. Descriptors are
/// the lowest free integer starting at 3. Single-threaded.
ServiceBinding correct_fs();

/// Host mutexes and futexes serving the sync model's externs, with real
/// blocking. Thread-safe.
ServiceBinding correct_sync();

struct AdversaryVariant {
  std::string id;
  std::string model;  // "fs" or "sync"
  std::string description;
};

const std::vector<AdversaryVariant>& adversary_catalog();

/// `base` with one misbehavior injected (UnknownVariant for unknown ids).
ServiceBinding adversary(const ServiceBinding& base, std::string_view variant);

}  // namespace gk

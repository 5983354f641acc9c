#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/ast.hpp"
#include "gatekeeper/value.hpp"

namespace gk {

using Key = std::vector<Value>;

/// Deep copy of every map; entries ordered by canonical key encoding.
struct StateSnapshot {
  struct Entry {
    Key key;
    std::vector<Value> fields;
    bool operator==(const Entry&) const = default;
  };
  std::map<std::string, std::map<std::string, Entry>> maps;
  bool operator==(const StateSnapshot&) const = default;
};

/// One write applied to the store, as recorded in trace state deltas.
struct StateWrite {
  std::string map;
  Key key;
  std::string field;  // empty for a delete
  Value value;
};

class StateStore;

/// Holds a map's atomic-block lock; released on destruction.
class AtomicLock {
 public:
  AtomicLock(AtomicLock&&) noexcept = default;
  ~AtomicLock() = default;

  /// Blocks (releasing the lock while waiting) until `ready` holds. Woken by
  /// writes to the map, with a 1 ms poll fallback.
  void wait_until(const std::function<bool()>& ready);

 private:
  friend class StateStore;
  struct Slot;
  AtomicLock(Slot* slot);
  Slot* slot_;
  std::unique_lock<std::mutex> lock_;
};

/// Named abstract maps of key tuple -> record, with per-map locking.
/// Absence is a value: lookups of missing keys yield NULL.
class StateStore {
 public:
  explicit StateStore(std::vector<MapDecl> maps);
  ~StateStore();
  StateStore(const StateStore&) = delete;
  StateStore& operator=(const StateStore&) = delete;

  const MapDecl& decl(std::string_view map) const;
  bool has_map(std::string_view map) const;

  /// Record value, or NULL when the entry is absent.
  Value get(std::string_view map, const Key& key) const;
  bool contains(std::string_view map, const Key& key) const;
  /// Field of an entry; nullopt when the entry is absent.
  std::optional<Value> get_field(std::string_view map, const Key& key,
                                 std::string_view field) const;
  /// Allocates a zeroed entry when missing. Values are coerced to the
  /// declared field type (TypeMismatch / RangeError).
  void set(std::string_view map, const Key& key, std::string_view field, const Value& v);
  /// Idempotent.
  void erase(std::string_view map, const Key& key);
  /// Keys in sorted (canonical encoding) order.
  std::vector<Key> keys(std::string_view map) const;
  std::size_t size(std::string_view map) const;

  AtomicLock lock_atomic(std::string_view map);

  template <class F>
  auto with_entry_lock(std::string_view map, F&& body) {
    AtomicLock guard = lock_atomic(map);
    return body();
  }

  StateSnapshot snapshot() const;
  void restore(const StateSnapshot& snap);
  void clear();

  /// Deterministic JSON document: {map: [{"key": [...], "value": {...}}]}.
  std::string snapshot_json() const;
  static StateSnapshot snapshot_from_json(const std::vector<MapDecl>& maps,
                                          std::string_view json);

  const std::vector<MapDecl>& maps() const { return decls_; }

 private:
  struct Instance;
  Instance& instance(std::string_view map);
  const Instance& instance(std::string_view map) const;
  std::string encode_key(const Instance& inst, const Key& key) const;

  std::vector<MapDecl> decls_;
  std::map<std::string, std::unique_ptr<Instance>, std::less<>> instances_;
};

}  // namespace gk

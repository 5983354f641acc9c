#include "gatekeeper/state.hpp"

#include "gatekeeper/error.hpp"
#include "json_io.hpp"

namespace gk {

struct AtomicLock::Slot {
  std::mutex mu;
  std::condition_variable cv;
};

AtomicLock::AtomicLock(Slot* slot) : slot_(slot), lock_(slot->mu) {}

void AtomicLock::wait_until(const std::function<bool()>& ready) {
  while (!ready()) slot_->cv.wait_for(lock_, std::chrono::milliseconds(1));
}

struct StateStore::Instance {
  struct Entry {
    Key key;
    std::vector<Value> fields;
  };
  const MapDecl* decl = nullptr;
  mutable std::mutex mu;  // guards entries
  std::map<std::string, Entry> entries;
  AtomicLock::Slot slot;
};

StateStore::StateStore(std::vector<MapDecl> maps) : decls_(std::move(maps)) {
  for (const auto& d : decls_) {
    auto inst = std::make_unique<Instance>();
    inst->decl = &d;
    instances_.emplace(d.name, std::move(inst));
  }
}

StateStore::~StateStore() = default;

StateStore::Instance& StateStore::instance(std::string_view map) {
  auto it = instances_.find(map);
  if (it == instances_.end()) throw Error(ErrorCode::UnknownMap, "no map '" + std::string(map) + "'");
  return *it->second;
}

const StateStore::Instance& StateStore::instance(std::string_view map) const {
  auto it = instances_.find(map);
  if (it == instances_.end()) throw Error(ErrorCode::UnknownMap, "no map '" + std::string(map) + "'");
  return *it->second;
}

const MapDecl& StateStore::decl(std::string_view map) const { return *instance(map).decl; }

bool StateStore::has_map(std::string_view map) const { return instances_.count(map) != 0; }

std::string StateStore::encode_key(const Instance& inst, const Key& key) const {
  const auto& keys = inst.decl->keys;
  if (key.size() != keys.size()) {
    throw Error(ErrorCode::KeyArityMismatch, inst.decl->name + " takes " +
                                                 std::to_string(keys.size()) + " key(s), got " +
                                                 std::to_string(key.size()));
  }
  Key coerced;
  coerced.reserve(key.size());
  for (std::size_t i = 0; i < key.size(); ++i) coerced.push_back(key[i].coerce_to(keys[i].type));
  return canonical_key_encoding(coerced);
}

Value StateStore::get(std::string_view map, const Key& key) const {
  const auto& inst = instance(map);
  const std::string enc = encode_key(inst, key);
  std::lock_guard lock(inst.mu);
  auto it = inst.entries.find(enc);
  if (it == inst.entries.end()) return Value::null();
  std::vector<std::string> names;
  for (const auto& f : inst.decl->fields) names.push_back(f.name);
  return Value::record(inst.decl->name, std::move(names), it->second.fields);
}

bool StateStore::contains(std::string_view map, const Key& key) const {
  const auto& inst = instance(map);
  const std::string enc = encode_key(inst, key);
  std::lock_guard lock(inst.mu);
  return inst.entries.count(enc) != 0;
}

std::optional<Value> StateStore::get_field(std::string_view map, const Key& key,
                                           std::string_view field) const {
  const auto& inst = instance(map);
  const auto idx = inst.decl->field_index(field);
  if (!idx) {
    throw Error(ErrorCode::UnknownField,
                "map '" + inst.decl->name + "' has no field '" + std::string(field) + "'");
  }
  const std::string enc = encode_key(inst, key);
  std::lock_guard lock(inst.mu);
  auto it = inst.entries.find(enc);
  if (it == inst.entries.end()) return std::nullopt;
  return it->second.fields[*idx];
}

void StateStore::set(std::string_view map, const Key& key, std::string_view field,
                     const Value& v) {
  auto& inst = instance(map);
  const auto idx = inst.decl->field_index(field);
  if (!idx) {
    throw Error(ErrorCode::UnknownField,
                "map '" + inst.decl->name + "' has no field '" + std::string(field) + "'");
  }
  Value coerced = v.coerce_to(inst.decl->fields[*idx].type);
  const std::string enc = encode_key(inst, key);
  {
    std::lock_guard lock(inst.mu);
    auto it = inst.entries.find(enc);
    if (it == inst.entries.end()) {
      Instance::Entry e;
      for (std::size_t i = 0; i < key.size(); ++i) {
        e.key.push_back(key[i].coerce_to(inst.decl->keys[i].type));
      }
      for (const auto& f : inst.decl->fields) e.fields.push_back(Value::zero_of(f.type));
      it = inst.entries.emplace(enc, std::move(e)).first;
    }
    it->second.fields[*idx] = std::move(coerced);
  }
  inst.slot.cv.notify_all();
}

void StateStore::erase(std::string_view map, const Key& key) {
  auto& inst = instance(map);
  const std::string enc = encode_key(inst, key);
  {
    std::lock_guard lock(inst.mu);
    inst.entries.erase(enc);
  }
  inst.slot.cv.notify_all();
}

std::vector<Key> StateStore::keys(std::string_view map) const {
  const auto& inst = instance(map);
  std::lock_guard lock(inst.mu);
  std::vector<Key> out;
  out.reserve(inst.entries.size());
  for (const auto& [enc, e] : inst.entries) out.push_back(e.key);
  return out;
}

std::size_t StateStore::size(std::string_view map) const {
  const auto& inst = instance(map);
  std::lock_guard lock(inst.mu);
  return inst.entries.size();
}

AtomicLock StateStore::lock_atomic(std::string_view map) { return AtomicLock(&instance(map).slot); }

StateSnapshot StateStore::snapshot() const {
  StateSnapshot snap;
  for (const auto& d : decls_) {
    const auto& inst = instance(d.name);
    std::lock_guard lock(inst.mu);
    auto& out = snap.maps[d.name];
    for (const auto& [enc, e] : inst.entries) out.emplace(enc, StateSnapshot::Entry{e.key, e.fields});
  }
  return snap;
}

void StateStore::restore(const StateSnapshot& snap) {
  for (const auto& d : decls_) {
    auto& inst = instance(d.name);
    {
      std::lock_guard lock(inst.mu);
      inst.entries.clear();
      auto it = snap.maps.find(d.name);
      if (it != snap.maps.end()) {
        for (const auto& [enc, e] : it->second) inst.entries.emplace(enc, Instance::Entry{e.key, e.fields});
      }
    }
    inst.slot.cv.notify_all();
  }
}

void StateStore::clear() { restore(StateSnapshot{}); }

std::string StateStore::snapshot_json() const {
  using detail::Json;
  const StateSnapshot snap = snapshot();
  Json doc = Json::object();
  for (const auto& d : decls_) {
    Json entries = Json::array();
    for (const auto& [enc, e] : snap.maps.at(d.name)) {
      Json key = Json::array();
      for (const auto& k : e.key) key.push_back(detail::value_to_json(k));
      Json value = Json::object();
      for (std::size_t i = 0; i < d.fields.size(); ++i) {
        value[d.fields[i].name] = detail::value_to_json(e.fields[i]);
      }
      entries.push_back(Json{{"key", std::move(key)}, {"value", std::move(value)}});
    }
    doc[d.name] = std::move(entries);
  }
  return doc.dump();
}

StateSnapshot StateStore::snapshot_from_json(const std::vector<MapDecl>& maps,
                                             std::string_view json) {
  using detail::Json;
  StateSnapshot snap;
  Json doc;
  try {
    doc = Json::parse(json);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::CorruptTrace, std::string("bad state snapshot: ") + e.what());
  }
  for (const auto& d : maps) {
    auto& out = snap.maps[d.name];
    if (!doc.contains(d.name)) continue;
    for (const auto& entry : doc.at(d.name)) {
      StateSnapshot::Entry e;
      const auto& key = entry.at("key");
      if (key.size() != d.keys.size()) {
        throw Error(ErrorCode::KeyArityMismatch, "snapshot key arity for " + d.name);
      }
      for (std::size_t i = 0; i < d.keys.size(); ++i) {
        e.key.push_back(detail::value_from_json(key[i], d.keys[i].type));
      }
      const auto& value = entry.at("value");
      for (const auto& f : d.fields) {
        e.fields.push_back(value.contains(f.name) ? detail::value_from_json(value.at(f.name), f.type)
                                                  : Value::zero_of(f.type));
      }
      out.emplace(canonical_key_encoding(e.key), std::move(e));
    }
  }
  return snap;
}

}  // namespace gk

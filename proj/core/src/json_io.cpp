#include "json_io.hpp"

#include <cstdio>

#include "gatekeeper/error.hpp"

namespace gk::detail {

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw Error(ErrorCode::TypeMismatch, "odd-length hex string");
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::TypeMismatch, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return out;
}

namespace {

Json int_to_json(WideInt v) {
  if (v >= INT64_MIN && v <= INT64_MAX) return Json(static_cast<std::int64_t>(v));
  if (v > 0 && v <= static_cast<WideInt>(UINT64_MAX)) return Json(static_cast<std::uint64_t>(v));
  return Json(wide_to_string(v));
}

WideInt int_from_json(const Json& j) {
  if (j.is_number_unsigned()) return static_cast<WideInt>(j.get<std::uint64_t>());
  if (j.is_number_integer()) return static_cast<WideInt>(j.get<std::int64_t>());
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    WideInt v = 0;
    std::size_t i = 0;
    const bool neg = !s.empty() && s[0] == '-';
    if (neg) i = 1;
    if (i >= s.size()) throw Error(ErrorCode::TypeMismatch, "bad integer '" + s + "'");
    for (; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') throw Error(ErrorCode::TypeMismatch, "bad integer '" + s + "'");
      v = v * 10 + (s[i] - '0');
    }
    return neg ? -v : v;
  }
  throw Error(ErrorCode::TypeMismatch, "expected integer, got " + j.dump());
}

}  // namespace

Json value_to_json(const Value& v) {
  struct Visitor {
    Json operator()(std::monostate) const { return nullptr; }
    Json operator()(bool b) const { return b; }
    Json operator()(const IntValue& i) const { return int_to_json(i.v); }
    Json operator()(const StrValue& s) const { return s.s; }
    Json operator()(const BytesValue& b) const { return Json{{"hex", to_hex(b.data)}}; }
    Json operator()(const ListValue& l) const {
      Json arr = Json::array();
      for (const auto& item : l.items) arr.push_back(value_to_json(item));
      return arr;
    }
    Json operator()(const RecordValue& r) const {
      Json obj = Json::object();
      for (std::size_t i = 0; i < r.fields.size(); ++i) obj[r.names[i]] = value_to_json(r.fields[i]);
      return obj;
    }
  };
  return std::visit(Visitor{}, v.storage());
}

Value value_from_json(const Json& j, const GkType& type) {
  switch (type.tag()) {
    case GkType::Tag::Int: return Value::integer(type.int_kind(), int_from_json(j));
    case GkType::Tag::String:
      if (!j.is_string()) throw Error(ErrorCode::TypeMismatch, "expected string, got " + j.dump());
      return Value::str(j.get<std::string>());
    case GkType::Tag::Bool:
      if (!j.is_boolean()) throw Error(ErrorCode::TypeMismatch, "expected bool, got " + j.dump());
      return Value::boolean(j.get<bool>());
    case GkType::Tag::Void:
    case GkType::Tag::Null: return Value::null();
    case GkType::Tag::Array:
      if (type.is_byte_array()) {
        if (j.is_object() && j.contains("hex")) {
          return Value::bytes(from_hex(j.at("hex").get<std::string>()));
        }
        throw Error(ErrorCode::TypeMismatch, "expected {\"hex\": ...}, got " + j.dump());
      } else {
        if (!j.is_array()) throw Error(ErrorCode::TypeMismatch, "expected array, got " + j.dump());
        std::vector<Value> items;
        for (const auto& e : j) items.push_back(value_from_json(e, type.element()));
        return Value::list(std::move(items));
      }
    case GkType::Tag::Record: break;
  }
  if (j.is_null()) return Value::null();
  throw Error(ErrorCode::TypeMismatch, "cannot decode record value " + j.dump());
}

Value value_from_json_untyped(const Json& j) {
  if (j.is_null()) return Value::null();
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer() || j.is_number_unsigned()) return Value::wide(int_from_json(j));
  if (j.is_string()) return Value::str(j.get<std::string>());
  if (j.is_object() && j.contains("hex")) return Value::bytes(from_hex(j.at("hex").get<std::string>()));
  if (j.is_array()) {
    std::vector<Value> items;
    for (const auto& e : j) items.push_back(value_from_json_untyped(e));
    return Value::list(std::move(items));
  }
  throw Error(ErrorCode::TypeMismatch, "cannot decode value " + j.dump());
}

}  // namespace gk::detail

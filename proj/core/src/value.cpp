#include "gatekeeper/value.hpp"

#include <algorithm>
#include <cstdio>

#include "gatekeeper/error.hpp"

namespace gk {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UnknownKeyword: return "UnknownKeyword";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::IllegalRequiresPlacement: return "IllegalRequiresPlacement";
    case ErrorCode::DesignError: return "DesignError";
    case ErrorCode::UnknownMap: return "UnknownMap";
    case ErrorCode::KeyArityMismatch: return "KeyArityMismatch";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::NullDereference: return "NullDereference";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::Unsat: return "Unsat";
    case ErrorCode::DomainExhausted: return "DomainExhausted";
    case ErrorCode::UnknownAction: return "UnknownAction";
    case ErrorCode::ArgTypeMismatch: return "ArgTypeMismatch";
    case ErrorCode::ServiceUnavailable: return "ServiceUnavailable";
    case ErrorCode::InitTypeMismatch: return "InitTypeMismatch";
    case ErrorCode::ModelUnsat: return "ModelUnsat";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::ConcurrencyError: return "ConcurrencyError";
    case ErrorCode::TraceVersionMismatch: return "TraceVersionMismatch";
    case ErrorCode::CorruptTrace: return "CorruptTrace";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::UnknownVariant: return "UnknownVariant";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::ScriptParseError: return "ScriptParseError";
    case ErrorCode::ScenarioError: return "ScenarioError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

IntRange int_range(IntKind kind) {
  switch (kind) {
    case IntKind::Int: return {INT32_MIN, INT32_MAX};
    case IntKind::OffT:
    case IntKind::SsizeT: return {INT64_MIN, INT64_MAX};
    case IntKind::SizeT: return {0, static_cast<WideInt>(UINT64_MAX)};
    case IntKind::Char: return {0, 255};
    case IntKind::Wide: break;
  }
  const WideInt big = static_cast<WideInt>(1) << 120;
  return {-big, big};
}

std::string_view to_string(IntKind kind) {
  switch (kind) {
    case IntKind::Int: return "int";
    case IntKind::OffT: return "off_t";
    case IntKind::SizeT: return "size_t";
    case IntKind::SsizeT: return "ssize_t";
    case IntKind::Char: return "char";
    case IntKind::Wide: return "<int>";
  }
  return "?";
}

bool fits(IntKind kind, WideInt v) {
  const auto r = int_range(kind);
  return v >= r.min && v <= r.max;
}

std::string wide_to_string(WideInt v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  // Magnitudes stay far below 2^127 in practice; negate via unsigned.
  unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1
                              : static_cast<unsigned __int128>(v);
  std::string out;
  while (mag != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(mag % 10)));
    mag /= 10;
  }
  if (neg) out.push_back('-');
  std::reverse(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- GkType

GkType GkType::integer(IntKind kind) {
  GkType t;
  t.tag_ = Tag::Int;
  t.kind_ = kind;
  return t;
}

GkType GkType::string() {
  GkType t;
  t.tag_ = Tag::String;
  return t;
}

GkType GkType::void_type() { return GkType(); }

GkType GkType::array(GkType element) {
  GkType t;
  t.tag_ = Tag::Array;
  t.element_ = std::make_shared<const GkType>(std::move(element));
  return t;
}

GkType GkType::record(std::string map_name) {
  GkType t;
  t.tag_ = Tag::Record;
  t.map_ = std::move(map_name);
  return t;
}

GkType GkType::boolean() {
  GkType t;
  t.tag_ = Tag::Bool;
  return t;
}

GkType GkType::null() {
  GkType t;
  t.tag_ = Tag::Null;
  return t;
}

bool GkType::is_byte_array() const {
  if (tag_ != Tag::Array) return false;
  const auto& e = *element_;
  return e.is_void() || (e.is_int() && e.int_kind() == IntKind::Char);
}

std::string GkType::to_string() const {
  switch (tag_) {
    case Tag::Int: return std::string(gk::to_string(kind_));
    case Tag::String: return "string";
    case Tag::Void: return "void";
    case Tag::Array: return element_->to_string() + "[]";
    case Tag::Record: return "record<" + map_ + ">";
    case Tag::Bool: return "bool";
    case Tag::Null: return "NULL";
  }
  return "?";
}

bool operator==(const GkType& a, const GkType& b) {
  if (a.tag_ != b.tag_) return false;
  switch (a.tag_) {
    case GkType::Tag::Int: return a.kind_ == b.kind_;
    case GkType::Tag::Array: return *a.element_ == *b.element_;
    case GkType::Tag::Record: return a.map_ == b.map_;
    default: return true;
  }
}

// ----------------------------------------------------------------- Value

Value Value::boolean(bool b) { return Value(Storage(b)); }

Value Value::integer(IntKind kind, WideInt v) {
  if (!fits(kind, v)) {
    throw Error(ErrorCode::RangeError, wide_to_string(v) + " does not fit " +
                                           std::string(gk::to_string(kind)));
  }
  return Value(Storage(IntValue{kind, v}));
}

Value Value::wide(WideInt v) { return Value(Storage(IntValue{IntKind::Wide, v})); }

Value Value::str(std::string s) { return Value(Storage(StrValue{std::move(s)})); }

Value Value::bytes(std::vector<std::uint8_t> data) {
  return Value(Storage(BytesValue{std::move(data)}));
}

Value Value::list(std::vector<Value> items) {
  return Value(Storage(ListValue{std::move(items)}));
}

Value Value::record(std::string map, std::vector<std::string> names,
                    std::vector<Value> fields) {
  return Value(Storage(RecordValue{std::move(map), std::move(names), std::move(fields)}));
}

Value Value::zero_of(const GkType& type) {
  switch (type.tag()) {
    case GkType::Tag::Int: return Value::integer(type.int_kind(), 0);
    case GkType::Tag::String: return Value::str("");
    case GkType::Tag::Array:
      if (type.is_byte_array()) return Value::bytes({});
      return Value::list({});
    case GkType::Tag::Bool: return Value::boolean(false);
    default: return Value::null();
  }
}

bool Value::as_bool() const {
  if (const auto* b = std::get_if<bool>(&v_)) return *b;
  throw Error(ErrorCode::TypeMismatch, "expected bool, got " + to_string());
}

WideInt Value::as_int() const {
  if (const auto* i = std::get_if<IntValue>(&v_)) return i->v;
  throw Error(ErrorCode::TypeMismatch, "expected integer, got " + to_string());
}

IntKind Value::int_kind() const {
  if (const auto* i = std::get_if<IntValue>(&v_)) return i->kind;
  throw Error(ErrorCode::TypeMismatch, "expected integer, got " + to_string());
}

const std::string& Value::as_str() const {
  if (const auto* s = std::get_if<StrValue>(&v_)) return s->s;
  throw Error(ErrorCode::TypeMismatch, "expected string, got " + to_string());
}

const std::vector<std::uint8_t>& Value::as_bytes() const {
  if (const auto* b = std::get_if<BytesValue>(&v_)) return b->data;
  throw Error(ErrorCode::TypeMismatch, "expected byte array, got " + to_string());
}

std::vector<std::uint8_t>& Value::mutable_bytes() {
  if (auto* b = std::get_if<BytesValue>(&v_)) return b->data;
  throw Error(ErrorCode::TypeMismatch, "expected byte array, got " + to_string());
}

const std::vector<Value>& Value::as_list() const {
  if (const auto* l = std::get_if<ListValue>(&v_)) return l->items;
  throw Error(ErrorCode::TypeMismatch, "expected array, got " + to_string());
}

std::vector<Value>& Value::mutable_list() {
  if (auto* l = std::get_if<ListValue>(&v_)) return l->items;
  throw Error(ErrorCode::TypeMismatch, "expected array, got " + to_string());
}

const RecordValue& Value::as_record() const {
  if (const auto* r = std::get_if<RecordValue>(&v_)) return *r;
  throw Error(ErrorCode::NullDereference, "expected map entry, got " + to_string());
}

RecordValue& Value::mutable_record() {
  if (auto* r = std::get_if<RecordValue>(&v_)) return *r;
  throw Error(ErrorCode::NullDereference, "expected map entry, got " + to_string());
}

const Value* Value::field(std::string_view name) const {
  const auto* r = std::get_if<RecordValue>(&v_);
  if (r == nullptr) return nullptr;
  for (std::size_t i = 0; i < r->names.size(); ++i) {
    if (r->names[i] == name) return &r->fields[i];
  }
  return nullptr;
}

Value Value::coerce_to(const GkType& type) const {
  switch (type.tag()) {
    case GkType::Tag::Int:
      return Value::integer(type.int_kind(), as_int());
    case GkType::Tag::String:
      if (is_str()) return *this;
      break;
    case GkType::Tag::Array:
      if (type.is_byte_array() && is_bytes()) return *this;
      if (!type.is_byte_array() && is_list()) return *this;
      break;
    case GkType::Tag::Void:
      return Value::null();
    case GkType::Tag::Bool:
      if (is_bool()) return *this;
      break;
    case GkType::Tag::Record:
      if (is_record() || is_null()) return *this;
      break;
    case GkType::Tag::Null:
      if (is_null()) return *this;
      break;
  }
  throw Error(ErrorCode::TypeMismatch,
              "cannot use " + to_string() + " as " + type.to_string());
}

namespace {

std::string escape_string(const std::string& s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20 || c >= 0x7f) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\x%02x", c);
          out += buf;
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out += "\"";
  return out;
}

}  // namespace

std::string Value::to_string() const {
  struct Visitor {
    std::string operator()(std::monostate) const { return "NULL"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const IntValue& i) const { return wide_to_string(i.v); }
    std::string operator()(const StrValue& s) const { return escape_string(s.s); }
    std::string operator()(const BytesValue& b) const {
      std::string out = "bytes(";
      const std::size_t shown = std::min<std::size_t>(b.data.size(), 16);
      for (std::size_t i = 0; i < shown; ++i) {
        char buf[4];
        std::snprintf(buf, sizeof buf, "%02x", b.data[i]);
        out += buf;
      }
      if (shown < b.data.size()) out += "..";
      out += "; len=" + std::to_string(b.data.size()) + ")";
      return out;
    }
    std::string operator()(const ListValue& l) const {
      std::string out = "[";
      for (std::size_t i = 0; i < l.items.size(); ++i) {
        if (i) out += ", ";
        out += l.items[i].to_string();
      }
      return out + "]";
    }
    std::string operator()(const RecordValue& r) const {
      std::string out = r.map + "{";
      for (std::size_t i = 0; i < r.fields.size(); ++i) {
        if (i) out += ", ";
        out += r.names[i] + ":" + r.fields[i].to_string();
      }
      return out + "}";
    }
  };
  return std::visit(Visitor{}, v_);
}

bool operator==(const Value& a, const Value& b) {
  if (a.v_.index() != b.v_.index()) return false;
  struct Visitor {
    const Value::Storage& other;
    bool operator()(std::monostate) const { return true; }
    bool operator()(bool x) const { return x == std::get<bool>(other); }
    bool operator()(const IntValue& x) const { return x.v == std::get<IntValue>(other).v; }
    bool operator()(const StrValue& x) const { return x.s == std::get<StrValue>(other).s; }
    bool operator()(const BytesValue& x) const {
      return x.data == std::get<BytesValue>(other).data;
    }
    bool operator()(const ListValue& x) const {
      return x.items == std::get<ListValue>(other).items;
    }
    bool operator()(const RecordValue& x) const {
      const auto& y = std::get<RecordValue>(other);
      return x.map == y.map && x.fields == y.fields;
    }
  };
  return std::visit(Visitor{b.v_}, a.v_);
}

namespace {

void encode_component(const Value& v, std::string& out) {
  if (v.is_int()) {
    // Bias by 2^127 so unsigned big-endian byte order equals numeric order.
    auto u = static_cast<unsigned __int128>(v.as_int()) ^
             (static_cast<unsigned __int128>(1) << 127);
    out.push_back('i');
    for (int shift = 120; shift >= 0; shift -= 8) {
      out.push_back(static_cast<char>(static_cast<std::uint8_t>(u >> shift)));
    }
    return;
  }
  auto encode_bytes = [&out](char tag, const auto& data) {
    out.push_back(tag);
    for (auto c : data) {
      const auto b = static_cast<std::uint8_t>(c);
      // 0x00 is escaped so the terminator sorts before any content byte.
      if (b == 0) {
        out.push_back('\0');
        out.push_back('\xff');
      } else {
        out.push_back(static_cast<char>(b));
      }
    }
    out.push_back('\0');
    out.push_back('\0');
  };
  if (v.is_str()) {
    encode_bytes('s', v.as_str());
    return;
  }
  if (v.is_bytes()) {
    encode_bytes('b', v.as_bytes());
    return;
  }
  if (v.is_bool()) {
    out.push_back('o');
    out.push_back(v.as_bool() ? '\1' : '\0');
    return;
  }
  throw Error(ErrorCode::TypeMismatch, "unsupported map key component " + v.to_string());
}

}  // namespace

std::string canonical_key_encoding(const std::vector<Value>& key) {
  std::string out;
  for (const auto& component : key) encode_component(component, out);
  return out;
}

}  // namespace gk

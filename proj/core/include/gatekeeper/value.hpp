#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gk {

/// Arbitrary-precision-enough integer used for all intermediate arithmetic.
/// Declared kinds are at most 64 bits wide, so 128 bits never wraps for the
/// operators the language offers (shifts are bounds-checked).
using WideInt = __int128;

enum class IntKind : std::uint8_t {
  Int,     // 32-bit signed
  OffT,    // 64-bit signed
  SizeT,   // 64-bit unsigned
  SsizeT,  // 64-bit signed
  Char,    // 8-bit unsigned
  Wide,    // literals and intermediate results; never declared by a model
};

struct IntRange {
  WideInt min;
  WideInt max;
};

IntRange int_range(IntKind kind);
std::string_view to_string(IntKind kind);
bool fits(IntKind kind, WideInt v);
std::string wide_to_string(WideInt v);

class GkType {
 public:
  enum class Tag : std::uint8_t { Int, String, Void, Array, Record, Bool, Null };

  GkType() = default;

  static GkType integer(IntKind kind);
  static GkType string();
  static GkType void_type();
  static GkType array(GkType element);
  static GkType record(std::string map_name);
  static GkType boolean();
  static GkType null();

  Tag tag() const { return tag_; }
  IntKind int_kind() const { return kind_; }
  const GkType& element() const { return *element_; }
  const std::string& record_map() const { return map_; }

  bool is_int() const { return tag_ == Tag::Int; }
  bool is_array() const { return tag_ == Tag::Array; }
  bool is_string() const { return tag_ == Tag::String; }
  bool is_void() const { return tag_ == Tag::Void; }
  bool is_record() const { return tag_ == Tag::Record; }
  bool is_bool() const { return tag_ == Tag::Bool; }
  bool is_null() const { return tag_ == Tag::Null; }

  /// Arrays of char or void hold raw bytes.
  bool is_byte_array() const;

  std::string to_string() const;

  friend bool operator==(const GkType& a, const GkType& b);

 private:
  Tag tag_ = Tag::Void;
  IntKind kind_ = IntKind::Int;
  std::shared_ptr<const GkType> element_;
  std::string map_;
};

class Value;

struct IntValue {
  IntKind kind;
  WideInt v;
};

struct StrValue {
  std::string s;
};

struct BytesValue {
  std::vector<std::uint8_t> data;
};

struct ListValue {
  std::vector<Value> items;
};

struct RecordValue {
  std::string map;
  std::vector<std::string> names;
  std::vector<Value> fields;
};

/// Runtime value universe of the model language.
class Value {
 public:
  using Storage = std::variant<std::monostate, bool, IntValue, StrValue,
                               BytesValue, ListValue, RecordValue>;

  Value() = default;

  static Value null() { return Value(); }
  static Value boolean(bool b);
  /// Range-checked against `kind`; throws RangeError.
  static Value integer(IntKind kind, WideInt v);
  static Value wide(WideInt v);
  static Value str(std::string s);
  static Value bytes(std::vector<std::uint8_t> data);
  static Value list(std::vector<Value> items);
  static Value record(std::string map, std::vector<std::string> names,
                      std::vector<Value> fields);
  /// Zero/empty value of a declared type.
  static Value zero_of(const GkType& type);

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_int() const { return std::holds_alternative<IntValue>(v_); }
  bool is_str() const { return std::holds_alternative<StrValue>(v_); }
  bool is_bytes() const { return std::holds_alternative<BytesValue>(v_); }
  bool is_list() const { return std::holds_alternative<ListValue>(v_); }
  bool is_record() const { return std::holds_alternative<RecordValue>(v_); }

  bool as_bool() const;
  WideInt as_int() const;
  IntKind int_kind() const;
  const std::string& as_str() const;
  const std::vector<std::uint8_t>& as_bytes() const;
  std::vector<std::uint8_t>& mutable_bytes();
  const std::vector<Value>& as_list() const;
  std::vector<Value>& mutable_list();
  const RecordValue& as_record() const;
  RecordValue& mutable_record();

  /// Field lookup on a record value; nullptr if absent.
  const Value* field(std::string_view name) const;

  /// Converts to the declared type (integer kinds range-checked).
  /// Throws TypeMismatch or RangeError.
  Value coerce_to(const GkType& type) const;

  /// Human-readable rendering in model-literal syntax.
  std::string to_string() const;

  const Storage& storage() const { return v_; }

  friend bool operator==(const Value& a, const Value& b);

 private:
  explicit Value(Storage s) : v_(std::move(s)) {}
  Storage v_;
};

/// Order-preserving byte encoding used to key map entries: integers compare
/// numerically, strings and byte arrays lexicographically.
std::string canonical_key_encoding(const std::vector<Value>& key);

}  // namespace gk

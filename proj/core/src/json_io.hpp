#pragma once

// Value <-> JSON conversion shared by traces, snapshots and reports.

#include "json.hpp"

#include "gatekeeper/value.hpp"

namespace gk::detail {

using Json = nlohmann::ordered_json;

/// Integers become JSON numbers when they fit 64 bits, else decimal strings;
/// byte arrays become {"hex": "..."}.
Json value_to_json(const Value& v);
/// Decodes with the declared type as a guide; throws TypeMismatch.
Value value_from_json(const Json& j, const GkType& type);
/// Type-free decoding used for keys and loosely typed inputs.
Value value_from_json_untyped(const Json& j);

std::string to_hex(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

}  // namespace gk::detail

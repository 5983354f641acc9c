#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gatekeeper/models.hpp"
#include "gatekeeper/value.hpp"

namespace gk::test {

inline std::string source_path(const std::string& rel) { return std::string(GK_SOURCE_DIR) + "/" + rel; }

inline Value I(long long v) { return Value::wide(v); }
inline Value S(std::string s) { return Value::str(std::move(s)); }
inline Value Buf(std::size_t n, std::uint8_t fill = 0) { return Value::bytes(std::vector<std::uint8_t>(n, fill)); }

inline WideInt C(std::string_view name) { return *builtin_constant(name); }
inline long long Cl(std::string_view name) { return static_cast<long long>(C(name)); }

inline ProgramPtr fs_model() { return load_bundled("fs"); }
inline ProgramPtr sync_model() { return load_bundled("sync"); }

}  // namespace gk::test

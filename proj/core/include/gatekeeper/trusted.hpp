#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/value.hpp"

namespace gk {

/// Signature of an extern function implemented by the trusted host library.
struct TrustedSignature {
  std::vector<GkType> params;
  GkType result;
};

/// nullptr when `name` is not a trusted extern (and is therefore untrusted).
const TrustedSignature* trusted_signature(std::string_view name);
bool is_trusted_extern(std::string_view name);

/// Invokes a trusted extern. Invalid paths map to "" so models can branch on
/// them instead of failing.
Value call_trusted(std::string_view name, std::span<const Value> args);

/// Lexical path normalization against `cwd`: absolute, single separators,
/// no "." or ".." components. Throws InvalidPath for empty input, a
/// relative cwd, or ".." escaping the root.
std::string trusted_canonicalize(std::string_view cwd, std::string_view path);

/// Parent directory of a canonical path ("/" is its own parent).
std::string path_dirname(std::string_view canonical);
/// Last component of a canonical path ("/" for the root).
std::string path_basename(std::string_view canonical);

}  // namespace gk

#include "gatekeeper/trusted.hpp"

#include <map>

#include "gatekeeper/error.hpp"

namespace gk {

namespace {

const std::map<std::string, TrustedSignature, std::less<>>& registry() {
  static const std::map<std::string, TrustedSignature, std::less<>> kRegistry = {
      {"canonicalize", {{GkType::string(), GkType::string()}, GkType::string()}},
      {"dirname", {{GkType::string()}, GkType::string()}},
      {"basename", {{GkType::string()}, GkType::string()}},
  };
  return kRegistry;
}

}  // namespace

const TrustedSignature* trusted_signature(std::string_view name) {
  const auto& r = registry();
  auto it = r.find(name);
  return it == r.end() ? nullptr : &it->second;
}

bool is_trusted_extern(std::string_view name) { return trusted_signature(name) != nullptr; }

std::string trusted_canonicalize(std::string_view cwd, std::string_view path) {
  if (path.empty()) throw Error(ErrorCode::InvalidPath, "empty path");
  std::vector<std::string_view> parts;
  auto push_components = [&parts](std::string_view p) {
    std::size_t i = 0;
    while (i <= p.size()) {
      const std::size_t j = std::min(p.find('/', i), p.size());
      const std::string_view comp = p.substr(i, j - i);
      if (comp == "..") {
        if (parts.empty()) {
          throw Error(ErrorCode::InvalidPath, "path escapes the root: " + std::string(p));
        }
        parts.pop_back();
      } else if (!comp.empty() && comp != ".") {
        parts.push_back(comp);
      }
      i = j + 1;
    }
  };
  if (path.front() != '/') {
    if (cwd.empty() || cwd.front() != '/') {
      throw Error(ErrorCode::InvalidPath, "working directory is not absolute");
    }
    push_components(cwd);
  }
  push_components(path);
  if (parts.empty()) return "/";
  std::string out;
  for (auto p : parts) {
    out += '/';
    out += p;
  }
  return out;
}

std::string path_dirname(std::string_view canonical) {
  const auto slash = canonical.rfind('/');
  if (slash == std::string_view::npos || slash == 0) return "/";
  return std::string(canonical.substr(0, slash));
}

std::string path_basename(std::string_view canonical) {
  if (canonical == "/" || canonical.empty()) return "/";
  const auto slash = canonical.rfind('/');
  return std::string(slash == std::string_view::npos ? canonical : canonical.substr(slash + 1));
}

Value call_trusted(std::string_view name, std::span<const Value> args) {
  if (name == "canonicalize") {
    try {
      return Value::str(trusted_canonicalize(args[0].as_str(), args[1].as_str()));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidPath) throw;
      return Value::str("");
    }
  }
  if (name == "dirname") return Value::str(path_dirname(args[0].as_str()));
  if (name == "basename") return Value::str(path_basename(args[0].as_str()));
  throw Error(ErrorCode::UnknownIdentifier, "no trusted extern '" + std::string(name) + "'");
}

}  // namespace gk

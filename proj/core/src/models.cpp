#include "gatekeeper/models.hpp"

#include <mutex>

#include "gatekeeper/error.hpp"

namespace gk {

namespace detail {
extern const std::string_view kFsModelSource;
extern const std::string_view kSyncModelSource;
}  // namespace detail

const std::vector<std::string>& bundled_model_names() {
  static const std::vector<std::string> kNames = {"fs", "sync"};
  return kNames;
}

std::string_view bundled_model_source(std::string_view name) {
  if (name == "fs") return detail::kFsModelSource;
  if (name == "sync") return detail::kSyncModelSource;
  throw Error(ErrorCode::UnknownModel, "no bundled model named '" + std::string(name) + "'");
}

ProgramPtr load_bundled(std::string_view name) {
  std::string_view src = bundled_model_source(name);
  static std::mutex mu;
  static ProgramPtr fs, sync;
  std::lock_guard lock(mu);
  ProgramPtr& slot = name == "fs" ? fs : sync;
  if (!slot) slot = compile(src, std::string(name));
  return slot;
}

}  // namespace gk

#pragma once

// Single-edit mutants of the bundled FS model used to check that the
// conformance suites notice a model that is too strict or too loose.

#include <stdexcept>
#include <string>
#include <vector>

#include "gatekeeper/frontend.hpp"
#include "gatekeeper/models.hpp"

namespace gk::test {

struct Mutation {
  std::string id;
  std::string from;
  std::string to;
};

inline const std::vector<Mutation>& fs_mutations() {
  static const std::vector<Mutation> kAll = {
      // Rejects a read that fills the whole buffer.
      {"read_strict_bound", "requires (nread >= 0 and nread <= cnt);", "requires (nread >= 0 and nread < cnt);"},
      // Lets a read run past the end of the file.
      {"read_drop_size_bound", "  requires (fd_state(fd).off + nread <= ino_state(fd_state(fd).ino).sz or nread == 0);\n",
       ""},
      // Accepts a descriptor that aliases an open one.
      {"open_drop_fresh_fd", "  requires (fd_state(fd) == NULL);\n", ""},
  };
  return kAll;
}

/// The FS model with the first occurrence of `m.from` replaced, compiled
/// under the name "fs" so it binds to the FS services.
inline ProgramPtr mutate_fs(const Mutation& m) {
  std::string src(bundled_model_source("fs"));
  const auto pos = src.find(m.from);
  if (pos == std::string::npos) throw std::logic_error("mutation site not found: " + m.id);
  src.replace(pos, m.from.size(), m.to);
  return compile(src, "fs");
}

}  // namespace gk::test

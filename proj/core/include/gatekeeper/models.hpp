#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/frontend.hpp"

namespace gk {

/// Names accepted by load_bundled(): "fs" and "sync".
const std::vector<std::string>& bundled_model_names();

/// Source text of a bundled model, embedded at build time.
/// Throws Error(UnknownModel) for any other name.
std::string_view bundled_model_source(std::string_view name);

/// Compiled bundled model; compiled once and shared afterwards.
ProgramPtr load_bundled(std::string_view name);

}  // namespace gk

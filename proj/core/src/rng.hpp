#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "gatekeeper/value.hpp"

namespace gk::detail {

/// Seeded generator with a portable bounded draw (std distributions are
/// implementation-defined, which would break cross-platform determinism).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform-enough integer in [lo, hi].
  WideInt between(WideInt lo, WideInt hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<unsigned __int128>(hi - lo) + 1;
    unsigned __int128 r = gen_();
    if (span > (static_cast<unsigned __int128>(1) << 64)) r = (r << 64) | gen_();
    return lo + static_cast<WideInt>(r % span);
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(between(0, static_cast<WideInt>(n) - 1)); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gk::detail

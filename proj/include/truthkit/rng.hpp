#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <utility>
#include <vector>

namespace truthkit {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Stable seed derivation: the same (master, tag, parts) always yields the
/// same child seed on every platform.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> parts = {}) noexcept;

/// xoshiro256** with hand-rolled bounded/real draws. The std distributions are
/// implementation-defined, which would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n); n > 0.
  std::size_t below(std::size_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) std::swap(values[i - 1], values[below(i)]);
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace truthkit

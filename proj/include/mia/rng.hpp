#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace mia {

// Portable random helpers. The engine output sequence of mt19937_64 is fixed by
// the standard; the std distributions are not, so every draw goes through here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform double in (0, 1].
  double uniform_open_low() { return 1.0 - uniform01(); }

  /// Draws `k` distinct indices from [0, n) (partial Fisher-Yates); result is
  /// in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a label.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

/// FNV-1a 64-bit hash, stable across platforms.
std::uint64_t fnv1a64(std::string_view data);

std::string hex64(std::uint64_t value);

}  // namespace mia

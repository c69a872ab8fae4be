#pragma once

#include <cstdint>
#include <limits>

namespace magidyn {

// SplitMix64 finalizer (Steele, Lea & Flood 2014; constants from Vigna).
std::uint64_t mix64(std::uint64_t z) noexcept;

// Derives an independent stream key from a user seed and a stream id.
// key = mix64(seed ^ mix64(stream + 0x9E3779B97F4A7C15)).
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) noexcept;

// Counter-based 64-bit generator. Output i of a stream is
//   mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
// which is the SplitMix64 sequence seeded with `key`. Any element of a stream
// can be recomputed from (key, i) alone, so results do not depend on the
// standard library's distribution implementations.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  // Standard normal by the Box-Muller cosine branch; consumes two outputs.
  double normal() noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace magidyn

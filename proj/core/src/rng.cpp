#include "magidyn/rng.hpp"

#include <cmath>
#include <numbers>

namespace magidyn {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + kGolden));
}

CounterRng::result_type CounterRng::operator()() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() noexcept {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace magidyn

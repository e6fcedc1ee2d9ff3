#include "iwalk/rng.hpp"

#include <cmath>
#include <numbers>

namespace iwalk {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t component_key(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Stream::Stream(std::uint64_t seed, std::uint64_t key,
               std::uint64_t index) noexcept
    : state_(mix64(mix64(mix64(seed) ^ key) + index * kGolden)) {}

std::uint64_t Stream::next() noexcept {
  state_ += kGolden;
  return mix64(state_);
}

double Stream::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Stream::gaussian() noexcept {
  // 1 - u is in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace iwalk

#pragma once

#include <cstdint>
#include <string_view>

namespace iwalk {

/// 64-bit FNV-1a of a component name. Used to derive stream keys so that
/// every consumer of randomness draws from its own stream.
std::uint64_t component_key(std::string_view name) noexcept;

/// Counter-addressed random stream.
///
/// A stream is identified by (seed, component key, index) and its output is
/// the SplitMix64 sequence started from a hash of that triple. Streams for
/// different indices are statistically independent for practical purposes,
/// which lets sites and Monte Carlo paths be materialized in any order and
/// still produce identical draws.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t key, std::uint64_t index) noexcept;

  std::uint64_t next() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Standard normal via Box-Muller (consumes two uniforms).
  double gaussian() noexcept;

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace iwalk

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace iknet {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every draw is a
// pure function of (key, counter), so independent streams can be derived from
// a seed and a stream id without shared state.
class Philox {
 public:
  static constexpr std::string_view kName = "philox4x32-10";

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  /// Raw 4x32 block for an explicit counter; does not advance the stream.
  static std::array<std::uint32_t, 4> block(std::uint64_t seed, std::uint64_t stream,
                                            std::uint64_t counter) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (implementation-independent, unlike std::normal_distribution).
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Derives a child seed from a parent seed and a label.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t label) noexcept;
  static std::uint64_t derive(std::uint64_t seed, std::string_view label) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int available_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Uniform double in [0,1) for element `index` of a stateless stream.
double philox_uniform(std::uint64_t seed, std::uint64_t index) noexcept;

/// 64-bit FNV-1a, used for deterministic string hashing.
std::uint64_t fnv1a(std::string_view text) noexcept;

}  // namespace iknet

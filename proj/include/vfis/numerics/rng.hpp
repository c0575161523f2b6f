// SPDX-License-Identifier: Apache-2.0
//
// Portable seeded PRNG. xoshiro256** seeded through splitmix64; normal
// variates via the Marsaglia polar method (only log and sqrt, no trig), so the
// stream depends on nothing but IEEE-754 arithmetic and libm's log.

#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace vfis::numerics {

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Derive an independent seed for a named sub-stream.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::optional<double> spare_;
};

}  // namespace vfis::numerics

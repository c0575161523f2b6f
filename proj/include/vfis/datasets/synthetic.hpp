// SPDX-License-Identifier: Apache-2.0
//
// Procedural road scenes: sky above a horizon, textured ground, and a curved
// perspective ribbon running from a vanishing point to the bottom edge. The
// mask is the ribbon footprint. Pixel values are multiples of 1/255 so a PNG
// round trip is lossless.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vfis/datasets/dataset.hpp"

namespace vfis::datasets {

inline constexpr double kMinRoadFraction = 0.05;
inline constexpr double kMaxRoadFraction = 0.6;

/// One scene; a pure function of (id, size, seed).
[[nodiscard]] SamplePair synth_scene(std::uint64_t id, std::size_t size, std::uint64_t seed);

/// Ids 1..n. Throws ValidationError unless size is a positive multiple of 32.
[[nodiscard]] std::vector<SamplePair> gen_synthetic(std::size_t n, std::size_t size, std::uint64_t seed);

[[nodiscard]] double road_fraction(const Tensor& mask) noexcept;

}  // namespace vfis::datasets

// SPDX-License-Identifier: Apache-2.0

#include "vfis/datasets/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vfis/errors.hpp"
#include "vfis/numerics/rng.hpp"

namespace vfis::datasets {

namespace {

using numerics::Rng;

struct Rgb {
  double r, g, b;
};

double quantize(double v) noexcept { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

struct SceneParams {
  double horizon;      // row of the vanishing point
  double vanish_x;     // column of the vanishing point
  double bottom_x;     // ribbon centre on the bottom row
  double half_width;   // ribbon half-width on the bottom row
  double bend;         // lateral bulge, fraction of size
  bool dashes;
  Rgb sky, ground, road;
  double ground_noise, road_noise;
};

SceneParams draw_params(Rng& rng, double s) {
  SceneParams p{};
  p.horizon = s * rng.uniform(0.25, 0.45);
  p.vanish_x = s * rng.uniform(0.3, 0.7);
  p.bottom_x = s * rng.uniform(0.2, 0.8);
  p.half_width = s * rng.uniform(0.12, 0.4);
  p.bend = rng.uniform(-0.15, 0.15);
  p.dashes = rng.uniform() < 0.5;
  p.sky = {rng.uniform(0.45, 0.7), rng.uniform(0.6, 0.8), rng.uniform(0.8, 1.0)};
  // Ground hues range over grass and dirt; the road is a desaturated grey.
  const double g = rng.uniform(0.25, 0.5);
  p.ground = {g * rng.uniform(0.6, 1.3), g * rng.uniform(1.0, 1.5), g * rng.uniform(0.3, 0.7)};
  const double r = rng.uniform(0.3, 0.6);
  p.road = {r * rng.uniform(0.95, 1.05), r * rng.uniform(0.92, 1.0), r * rng.uniform(0.95, 1.1)};
  p.ground_noise = rng.uniform(0.05, 0.12);
  p.road_noise = rng.uniform(0.01, 0.04);
  return p;
}

SamplePair render(std::uint64_t id, std::size_t size, const SceneParams& p, Rng& rng) {
  const double s = static_cast<double>(size);
  SamplePair out{id, Tensor({3, size, size}), Tensor({1, size, size})};
  const std::size_t plane = size * size;
  for (std::size_t y = 0; y < size; ++y) {
    const double yc = static_cast<double>(y) + 0.5;
    const double t = (yc - p.horizon) / (s - p.horizon);
    double centre = 0.0, half = -1.0;
    if (t > 0.0) {
      centre = p.vanish_x + (p.bottom_x - p.vanish_x) * t + p.bend * s * std::sin(std::numbers::pi * t);
      half = p.half_width * t;
    }
    for (std::size_t x = 0; x < size; ++x) {
      const double xc = static_cast<double>(x) + 0.5;
      Rgb c;
      bool road = false;
      if (t <= 0.0) {
        const double fade = yc / p.horizon;
        const double n = rng.uniform(-0.02, 0.02);
        c = {p.sky.r + 0.15 * fade + n, p.sky.g + 0.1 * fade + n, p.sky.b + n};
      } else if (std::abs(xc - centre) <= half) {
        road = true;
        const double n = rng.uniform(-p.road_noise, p.road_noise);
        c = {p.road.r + n, p.road.g + n, p.road.b + n};
        const double phase = std::fmod(std::log(t + 0.05) * 6.0 + 100.0, 2.0);
        if (p.dashes && std::abs(xc - centre) <= std::max(0.5, 0.04 * half) && phase < 1.0) {
          c = {0.9 + n, 0.9 + n, 0.8 + n};
        }
      } else {
        const double n = rng.uniform(-p.ground_noise, p.ground_noise);
        const double shade = 0.8 + 0.3 * t;
        c = {p.ground.r * shade + n, p.ground.g * shade + n, p.ground.b * shade + n};
      }
      const std::size_t i = y * size + x;
      out.image[i] = quantize(c.r);
      out.image[plane + i] = quantize(c.g);
      out.image[2 * plane + i] = quantize(c.b);
      out.mask[i] = road ? 1.0 : 0.0;
    }
  }
  return out;
}

}  // namespace

double road_fraction(const Tensor& mask) noexcept {
  if (mask.empty()) return 0.0;
  return numerics::sum(mask) / static_cast<double>(mask.size());
}

SamplePair synth_scene(std::uint64_t id, std::size_t size, std::uint64_t seed) {
  if (size == 0 || size % 32 != 0) {
    throw ValidationError("synthetic image size " + std::to_string(size) + " must be a positive multiple of 32");
  }
  Rng rng(numerics::derive_seed(seed, id));
  for (;;) {
    const SceneParams p = draw_params(rng, static_cast<double>(size));
    SamplePair pair = render(id, size, p, rng);
    const double f = road_fraction(pair.mask);
    if (f >= kMinRoadFraction && f <= kMaxRoadFraction) return pair;
  }
}

std::vector<SamplePair> gen_synthetic(std::size_t n, std::size_t size, std::uint64_t seed) {
  std::vector<SamplePair> out;
  out.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) out.push_back(synth_scene(i, size, seed));
  return out;
}

}  // namespace vfis::datasets

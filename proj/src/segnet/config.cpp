// SPDX-License-Identifier: Apache-2.0

#include "vfis/segnet/config.hpp"

#include <numeric>

#include "vfis/errors.hpp"
#include "vfis/numerics/layers.hpp"

namespace vfis::segnet {

void EncoderConfig::validate() const {
  if (height == 0 || width == 0 || height % 32 != 0 || width % 32 != 0) {
    throw ConfigError("encoder input extents must be positive multiples of 32, got " + std::to_string(height) + "x" +
                      std::to_string(width));
  }
  for (std::size_t i = 0; i < kStages; ++i) {
    if (convs_per_stage[i] == 0 || widths[i] == 0) throw ConfigError("every encoder stage needs >= 1 conv and width");
  }
}

Tensor::Shape EncoderConfig::skip_shape(std::size_t stage) const {
  const std::size_t f = std::size_t{2} << stage;
  return {widths[stage], height / f, width / f};
}

std::size_t SegmentLayout::total() const noexcept { return std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}); }

std::size_t SegmentLayout::offset(std::size_t stage) const noexcept {
  return std::accumulate(lengths.begin(), lengths.begin() + static_cast<std::ptrdiff_t>(stage), std::size_t{0});
}

void SegmentLayout::validate() const {
  for (auto n : lengths)
    if (n == 0) throw ConfigError("every compressed segment needs at least one feature");
}

SegmentLayout SegmentLayout::scaled(std::size_t total) {
  if (total < kStages) {
    throw ConfigError("feature count " + std::to_string(total) + " is below the minimum of 5 (one per segment)");
  }
  constexpr std::array<std::size_t, kStages> base{25, 50, 75, 150, 200};
  SegmentLayout s;
  std::size_t used = 0;
  for (std::size_t i = 0; i + 1 < kStages; ++i) {
    s.lengths[i] = std::max<std::size_t>(1, (base[i] * total + 250) / 500);
    used += s.lengths[i];
  }
  if (used + 1 > total) {
    // Rounding overshoot only happens for very small totals.
    for (std::size_t i = 0; i + 1 < kStages; ++i) s.lengths[i] = 1;
    used = kStages - 1;
  }
  s.lengths[kStages - 1] = total - used;
  return s;
}

void DecoderConfig::validate() const {
  std::size_t h = skip_shapes[kStages - 1][1], w = skip_shapes[kStages - 1][2];
  for (std::size_t i = 0; i < kStages; ++i) {
    h = numerics::conv_transpose_out_extent(h, kernel, stride, pad);
    w = numerics::conv_transpose_out_extent(w, kernel, stride, pad);
    if (i + 1 < kStages) {
      const auto& target = skip_shapes[kStages - 2 - i];
      if (target[1] != h || target[2] != w) {
        throw ConfigError("decoder up-step " + std::to_string(i + 1) + " produces " + std::to_string(h) + "x" +
                          std::to_string(w) + " but the skip it fuses is " + numerics::shape_string(target));
      }
    }
  }
  if (h != out_height || w != out_width) throw ConfigError("decoder output extents do not match the model input");
}

void ModelConfig::validate() const {
  encoder.validate();
  segments.validate();
  for (std::size_t i = 0; i < kStages; ++i) {
    if (decoder.skip_shapes[i] != encoder.skip_shape(i)) {
      throw ConfigError("decoder skip shape for stage " + std::to_string(i + 1) + " differs from the encoder");
    }
  }
  decoder.validate();
}

ModelConfig make_preset(const std::string& name, std::optional<std::size_t> features, std::optional<bool> batchnorm) {
  ModelConfig m;
  EncoderConfig& e = m.encoder;
  e.preset = name;
  if (name == "vgg16") {
    e.height = e.width = 128;
    e.convs_per_stage = {2, 2, 3, 3, 3};
    e.widths = {64, 128, 256, 512, 512};
    e.batchnorm = true;
  } else if (name == "tiny") {
    e.height = e.width = 64;
    e.convs_per_stage = {2, 2, 2, 2, 2};
    e.widths = {8, 16, 32, 64, 64};
    e.batchnorm = true;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected tiny or vgg16)");
  }
  if (batchnorm) e.batchnorm = *batchnorm;
  if (features) m.segments = SegmentLayout::scaled(*features);

  DecoderConfig& d = m.decoder;
  for (std::size_t i = 0; i < kStages; ++i) d.skip_shapes[i] = e.skip_shape(i);
  // Up-step i lands on the resolution of skip (3 - i); the last one restores
  // the input resolution at the shallowest width.
  for (std::size_t i = 0; i + 1 < kStages; ++i) d.widths[i] = e.widths[kStages - 2 - i];
  d.widths[kStages - 1] = e.widths[0];
  d.out_height = e.height;
  d.out_width = e.width;
  m.validate();
  return m;
}

}  // namespace vfis::segnet

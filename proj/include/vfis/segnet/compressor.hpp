// SPDX-License-Identifier: Apache-2.0
//
// The interactive-layer bottleneck. Compressor (bottom party) maps each skip
// through its own flatten + linear layer onto its segment of the compressed
// vector; Expander (top party) inverts the shapes with linear + unflatten.

#pragma once

#include <array>
#include <vector>

#include "vfis/numerics/layers.hpp"
#include "vfis/segnet/config.hpp"

namespace vfis::segnet {

using numerics::LayerParams;

class Compressor {
 public:
  Compressor(const EncoderConfig& encoder, const SegmentLayout& segments, numerics::Rng& rng);

  /// SkipSet -> [B, segments.total()]
  [[nodiscard]] Tensor forward(const SkipSet& skips);
  [[nodiscard]] SkipSet backward(const Tensor& grad_features);

  [[nodiscard]] const SegmentLayout& segments() const noexcept { return segments_; }
  [[nodiscard]] std::vector<LayerParams*> params();

 private:
  std::array<Tensor::Shape, kStages> skip_shapes_;
  SegmentLayout segments_;
  std::array<LayerParams, kStages> layers_;
  std::array<Tensor, kStages> inputs_;  // flattened skips
  bool cached_ = false;
};

class Expander {
 public:
  Expander(const DecoderConfig& decoder, const SegmentLayout& segments, numerics::Rng& rng);

  /// [B, segments.total()] -> SkipSet with the encoder's shapes
  [[nodiscard]] SkipSet forward(const Tensor& features);
  [[nodiscard]] Tensor backward(const SkipSet& grad_skips);

  [[nodiscard]] const SegmentLayout& segments() const noexcept { return segments_; }
  [[nodiscard]] std::vector<LayerParams*> params();

 private:
  std::array<Tensor::Shape, kStages> skip_shapes_;
  SegmentLayout segments_;
  std::array<LayerParams, kStages> layers_;
  std::array<Tensor, kStages> inputs_;  // feature segments
  bool cached_ = false;
};

/// Split [B, total] into its five segments / concatenate them back.
[[nodiscard]] std::array<Tensor, kStages> split_segments(const Tensor& features, const SegmentLayout& layout);
[[nodiscard]] Tensor concat_segments(const std::array<Tensor, kStages>& parts, const SegmentLayout& layout);

}  // namespace vfis::segnet

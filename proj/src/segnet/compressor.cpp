// SPDX-License-Identifier: Apache-2.0

#include "vfis/segnet/compressor.hpp"

#include <algorithm>

#include "vfis/errors.hpp"

namespace vfis::segnet {

namespace n = vfis::numerics;

std::array<Tensor, kStages> split_segments(const Tensor& features, const SegmentLayout& layout) {
  if (features.rank() != 2 || features.dim(1) != layout.total()) {
    throw DimensionError("compressed features " + n::shape_string(features.shape()) + " do not match a partition of " +
                         std::to_string(layout.total()));
  }
  const std::size_t batch = features.dim(0), total = layout.total();
  std::array<Tensor, kStages> parts;
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::size_t len = layout.lengths[s], off = layout.offset(s);
    parts[s] = Tensor({batch, len});
    for (std::size_t b = 0; b < batch; ++b)
      std::copy_n(features.data() + b * total + off, len, parts[s].data() + b * len);
  }
  return parts;
}

Tensor concat_segments(const std::array<Tensor, kStages>& parts, const SegmentLayout& layout) {
  const std::size_t batch = parts[0].dim(0), total = layout.total();
  Tensor out({batch, total});
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::size_t len = layout.lengths[s], off = layout.offset(s);
    n::require_shape(parts[s], {batch, len}, "compressed segment");
    for (std::size_t b = 0; b < batch; ++b)
      std::copy_n(parts[s].data() + b * len, len, out.data() + b * total + off);
  }
  return out;
}

Compressor::Compressor(const EncoderConfig& encoder, const SegmentLayout& segments, n::Rng& rng)
    : segments_(segments) {
  segments_.validate();
  for (std::size_t s = 0; s < kStages; ++s) {
    skip_shapes_[s] = encoder.skip_shape(s);
    layers_[s] = n::make_linear("cmp/s" + std::to_string(s + 1), n::element_count(skip_shapes_[s]),
                                segments_.lengths[s], rng);
  }
}

Tensor Compressor::forward(const SkipSet& skips) {
  std::array<Tensor, kStages> parts;
  for (std::size_t s = 0; s < kStages; ++s) {
    const Tensor& skip = skips.stages[s];
    if (skip.rank() != 4) throw DimensionError("compress_skips: skip tensors must be rank 4");
    Tensor::Shape expect{skip.dim(0)};
    expect.insert(expect.end(), skip_shapes_[s].begin(), skip_shapes_[s].end());
    n::require_shape(skip, expect, "compress_skips skip");
    inputs_[s] = n::flatten(skip);
    parts[s] = n::linear_forward(inputs_[s], layers_[s]);
  }
  cached_ = true;
  return concat_segments(parts, segments_);
}

SkipSet Compressor::backward(const Tensor& grad_features) {
  if (!cached_) throw StateError("compressor backward without a matching forward pass");
  const auto grads = split_segments(grad_features, segments_);
  cached_ = false;
  SkipSet out;
  for (std::size_t s = 0; s < kStages; ++s) {
    out.stages[s] = n::unflatten(n::linear_backward(grads[s], inputs_[s], layers_[s]), skip_shapes_[s]);
  }
  return out;
}

std::vector<LayerParams*> Compressor::params() {
  std::vector<LayerParams*> out;
  for (auto& l : layers_) out.push_back(&l);
  return out;
}

Expander::Expander(const DecoderConfig& decoder, const SegmentLayout& segments, n::Rng& rng)
    : skip_shapes_(decoder.skip_shapes), segments_(segments) {
  segments_.validate();
  for (std::size_t s = 0; s < kStages; ++s) {
    layers_[s] = n::make_linear("exp/s" + std::to_string(s + 1), segments_.lengths[s],
                                n::element_count(skip_shapes_[s]), rng);
  }
}

SkipSet Expander::forward(const Tensor& features) {
  inputs_ = split_segments(features, segments_);
  SkipSet out;
  for (std::size_t s = 0; s < kStages; ++s) {
    out.stages[s] = n::unflatten(n::linear_forward(inputs_[s], layers_[s]), skip_shapes_[s]);
  }
  cached_ = true;
  return out;
}

Tensor Expander::backward(const SkipSet& grad_skips) {
  if (!cached_) throw StateError("expander backward without a matching forward pass");
  cached_ = false;
  std::array<Tensor, kStages> parts;
  for (std::size_t s = 0; s < kStages; ++s) {
    const Tensor& g = grad_skips.stages[s];
    if (g.rank() != 4) throw DimensionError("expand backward: skip gradients must be rank 4");
    parts[s] = n::linear_backward(n::flatten(g), inputs_[s], layers_[s]);
  }
  return concat_segments(parts, segments_);
}

std::vector<LayerParams*> Expander::params() {
  std::vector<LayerParams*> out;
  for (auto& l : layers_) out.push_back(&l);
  return out;
}

}  // namespace vfis::segnet

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "vfis/numerics/layers.hpp"
#include "vfis/segnet/config.hpp"

namespace vfis::segnet {

using numerics::LayerParams;

/// Top-party upsampling path. Starting from the deepest expanded skip, each
/// up-step is a stride-2 transpose conv; the first four add a 1x1-projected
/// copy of the next-shallower skip before the ReLU. A final 1x1 conv emits a
/// single logit channel at input resolution.
class Decoder {
 public:
  Decoder(const DecoderConfig& config, numerics::Rng& rng);

  /// SkipSet -> logits [B, 1, H, W]
  [[nodiscard]] Tensor forward(const SkipSet& skips);
  [[nodiscard]] SkipSet backward(const Tensor& grad_logits);

  [[nodiscard]] const DecoderConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::vector<LayerParams*> params();
  [[nodiscard]] std::uint64_t branch_signature() const;

 private:
  DecoderConfig config_;
  std::array<LayerParams, kStages> up_;
  std::array<LayerParams, kStages - 1> proj_;
  LayerParams head_;

  std::array<Tensor, kStages> up_inputs_;
  std::array<Tensor, kStages - 1> proj_inputs_;
  std::array<Tensor, kStages> relu_inputs_;
  Tensor head_input_;
  bool cached_ = false;
};

}  // namespace vfis::segnet

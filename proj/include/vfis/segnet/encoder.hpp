// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "vfis/numerics/layers.hpp"
#include "vfis/segnet/config.hpp"

namespace vfis::segnet {

using numerics::LayerParams;
using numerics::Mode;
using numerics::NamedTensor;

/// Bottom-party convolutional backbone. forward() keeps every activation
/// needed by backward(); a backward consumes that cache.
class Encoder {
 public:
  Encoder(const EncoderConfig& config, numerics::Rng& rng);

  [[nodiscard]] SkipSet forward(const Tensor& images, Mode mode);
  /// Accumulates parameter gradients; returns the gradient w.r.t. the images.
  Tensor backward(const SkipSet& grad_skips);

  [[nodiscard]] const EncoderConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::vector<LayerParams*> params();
  /// Non-trainable state (batch-norm running statistics).
  [[nodiscard]] std::vector<NamedTensor> buffers();
  /// Hash of the piecewise-linear branch taken by the last forward: every
  /// ReLU sign and every max-pool argmax.
  [[nodiscard]] std::uint64_t branch_signature() const;

 private:
  struct ConvUnit {
    LayerParams conv;
    std::optional<LayerParams> bn;
    numerics::BatchNormState bn_state;
    Tensor conv_input;
    numerics::BatchNormCache bn_cache;
    Tensor relu_input;
  };
  struct Stage {
    std::vector<ConvUnit> units;
    numerics::PoolIndices pool;
    Tensor::Shape pool_input_shape;
  };

  EncoderConfig config_;
  std::vector<Stage> stages_;
  bool cached_ = false;
};

}  // namespace vfis::segnet

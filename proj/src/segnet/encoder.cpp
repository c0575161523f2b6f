// SPDX-License-Identifier: Apache-2.0

#include "vfis/segnet/encoder.hpp"

#include "vfis/errors.hpp"

namespace vfis::segnet {

namespace n = vfis::numerics;

Encoder::Encoder(const EncoderConfig& config, n::Rng& rng) : config_(config) {
  config_.validate();
  std::size_t cin = config_.in_channels;
  for (std::size_t s = 0; s < kStages; ++s) {
    Stage stage;
    for (std::size_t u = 0; u < config_.convs_per_stage[s]; ++u) {
      const std::string base = "enc/s" + std::to_string(s + 1) + "/c" + std::to_string(u + 1);
      ConvUnit unit{n::make_conv2d(base + "/conv", cin, config_.widths[s], 3, rng), std::nullopt,
                    n::BatchNormState(config_.widths[s]), {}, {}, {}};
      if (config_.batchnorm) {
        // Batch-norm absorbs the conv bias.
        unit.conv.bias = Tensor{};
        unit.conv.grad_bias = Tensor{};
        unit.bn = n::make_batchnorm2d(base + "/bn", config_.widths[s]);
      }
      stage.units.push_back(std::move(unit));
      cin = config_.widths[s];
    }
    stages_.push_back(std::move(stage));
  }
}

SkipSet Encoder::forward(const Tensor& images, Mode mode) {
  if (images.rank() != 4) throw DimensionError("encoder_forward: images must be [B, C, H, W]");
  n::require_shape(images, {images.dim(0), config_.in_channels, config_.height, config_.width}, "encoder_forward images");
  SkipSet skips;
  Tensor x = images;
  for (std::size_t s = 0; s < kStages; ++s) {
    Stage& stage = stages_[s];
    for (ConvUnit& unit : stage.units) {
      unit.conv_input = std::move(x);
      Tensor y = n::conv2d_forward(unit.conv_input, unit.conv, 1, 1);
      if (unit.bn) y = n::batchnorm2d_forward(y, *unit.bn, unit.bn_state, mode, unit.bn_cache);
      unit.relu_input = std::move(y);
      x = n::relu_forward(unit.relu_input);
    }
    stage.pool_input_shape = x.shape();
    auto pooled = n::maxpool2d_forward(x, 2, 2);
    stage.pool = std::move(pooled.indices);
    skips.stages[s] = pooled.output;
    x = std::move(pooled.output);
  }
  cached_ = true;
  return skips;
}

Tensor Encoder::backward(const SkipSet& grad_skips) {
  if (!cached_) throw StateError("encoder backward without a matching forward pass");
  cached_ = false;
  Tensor g;
  for (std::size_t s = kStages; s-- > 0;) {
    Stage& stage = stages_[s];
    const Tensor& gs = grad_skips.stages[s];
    if (g.empty()) {
      g = gs;
    } else {
      n::require_shape(gs, g.shape(), "encoder backward skip gradient");
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gs[i];
    }
    g = n::maxpool2d_backward(g, stage.pool, stage.pool_input_shape);
    for (std::size_t u = stage.units.size(); u-- > 0;) {
      ConvUnit& unit = stage.units[u];
      g = n::relu_backward(g, unit.relu_input);
      if (unit.bn) g = n::batchnorm2d_backward(g, unit.bn_cache, *unit.bn);
      g = n::conv2d_backward(g, unit.conv_input, unit.conv, 1, 1);
    }
  }
  return g;
}

std::vector<LayerParams*> Encoder::params() {
  std::vector<LayerParams*> out;
  for (Stage& stage : stages_) {
    for (ConvUnit& unit : stage.units) {
      out.push_back(&unit.conv);
      if (unit.bn) out.push_back(&*unit.bn);
    }
  }
  return out;
}

std::vector<NamedTensor> Encoder::buffers() {
  std::vector<NamedTensor> out;
  for (Stage& stage : stages_) {
    for (ConvUnit& unit : stage.units) {
      if (!unit.bn) continue;
      out.push_back({unit.bn->name + "/running_mean", &unit.bn_state.running_mean});
      out.push_back({unit.bn->name + "/running_var", &unit.bn_state.running_var});
    }
  }
  return out;
}

std::uint64_t Encoder::branch_signature() const {
  std::uint64_t h = n::kFnvOffset;
  for (const Stage& stage : stages_) {
    for (const ConvUnit& unit : stage.units) h = n::fold_relu_pattern(h, unit.relu_input);
    h = n::fold_pool_pattern(h, stage.pool);
  }
  return h;
}

}  // namespace vfis::segnet

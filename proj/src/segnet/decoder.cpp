// SPDX-License-Identifier: Apache-2.0

#include "vfis/segnet/decoder.hpp"

#include "vfis/errors.hpp"

namespace vfis::segnet {

namespace n = vfis::numerics;

Decoder::Decoder(const DecoderConfig& config, n::Rng& rng) : config_(config) {
  config_.validate();
  std::size_t cin = config_.skip_shapes[kStages - 1][0];
  for (std::size_t i = 0; i < kStages; ++i) {
    const std::string base = "dec/u" + std::to_string(i + 1);
    up_[i] = n::make_conv_transpose2d(base + "/up", cin, config_.widths[i], config_.kernel, config_.stride, rng);
    if (i + 1 < kStages) {
      const std::size_t skip_c = config_.skip_shapes[kStages - 2 - i][0];
      proj_[i] = n::make_conv2d(base + "/proj", skip_c, config_.widths[i], 1, rng);
    }
    cin = config_.widths[i];
  }
  head_ = n::make_conv2d("dec/head", cin, 1, 1, rng);
}

Tensor Decoder::forward(const SkipSet& skips) {
  const Tensor& deepest = skips.stages[kStages - 1];
  if (deepest.rank() != 4) throw DimensionError("decoder_forward: skips must be rank 4");
  const std::size_t batch = deepest.dim(0);
  for (std::size_t s = 0; s < kStages; ++s) {
    Tensor::Shape expect{batch};
    expect.insert(expect.end(), config_.skip_shapes[s].begin(), config_.skip_shapes[s].end());
    n::require_shape(skips.stages[s], expect, "decoder_forward skip");
  }
  Tensor h = deepest;
  for (std::size_t i = 0; i < kStages; ++i) {
    up_inputs_[i] = std::move(h);
    Tensor u = n::conv_transpose2d_forward(up_inputs_[i], up_[i], config_.stride, config_.pad);
    if (i + 1 < kStages) {
      proj_inputs_[i] = skips.stages[kStages - 2 - i];
      const Tensor p = n::conv2d_forward(proj_inputs_[i], proj_[i], 1, 0);
      n::require_shape(p, u.shape(), "decoder skip fusion");
      for (std::size_t k = 0; k < u.size(); ++k) u[k] += p[k];
    }
    relu_inputs_[i] = std::move(u);
    h = n::relu_forward(relu_inputs_[i]);
  }
  head_input_ = std::move(h);
  cached_ = true;
  return n::conv2d_forward(head_input_, head_, 1, 0);
}

SkipSet Decoder::backward(const Tensor& grad_logits) {
  if (!cached_) throw StateError("decoder backward without a matching forward pass");
  cached_ = false;
  SkipSet grads;
  Tensor g = n::conv2d_backward(grad_logits, head_input_, head_, 1, 0);
  for (std::size_t i = kStages; i-- > 0;) {
    g = n::relu_backward(g, relu_inputs_[i]);
    if (i + 1 < kStages) grads.stages[kStages - 2 - i] = n::conv2d_backward(g, proj_inputs_[i], proj_[i], 1, 0);
    g = n::conv_transpose2d_backward(g, up_inputs_[i], up_[i], config_.stride, config_.pad);
  }
  grads.stages[kStages - 1] = std::move(g);
  return grads;
}

std::vector<LayerParams*> Decoder::params() {
  std::vector<LayerParams*> out;
  for (std::size_t i = 0; i < kStages; ++i) {
    out.push_back(&up_[i]);
    if (i + 1 < kStages) out.push_back(&proj_[i]);
  }
  out.push_back(&head_);
  return out;
}

std::uint64_t Decoder::branch_signature() const {
  std::uint64_t h = n::kFnvOffset;
  for (const Tensor& t : relu_inputs_) h = n::fold_relu_pattern(h, t);
  return h;
}

}  // namespace vfis::segnet

// SPDX-License-Identifier: Apache-2.0

#include "vfis/segnet/model.hpp"

#include "vfis/errors.hpp"
#include "vfis/numerics/rng.hpp"

namespace vfis::segnet {

namespace n = vfis::numerics;

std::vector<NamedTensor> named_tensors(const std::vector<LayerParams*>& params, std::vector<NamedTensor> buffers) {
  std::vector<NamedTensor> out;
  for (LayerParams* p : params) {
    out.push_back({p->name + "/w", &p->weights});
    if (!p->bias.empty()) out.push_back({p->name + "/b", &p->bias});
  }
  for (auto& b : buffers) out.push_back(std::move(b));
  return out;
}

std::uint64_t bottom_seed(std::uint64_t seed) noexcept { return n::derive_seed(seed, 1); }
std::uint64_t top_seed(std::uint64_t seed) noexcept { return n::derive_seed(seed, 2); }

// --- bottom ---------------------------------------------------------------

BottomModel::BottomModel(const ModelConfig& config, std::uint64_t seed)
    : init_rng_(bottom_seed(seed)),
      encoder_(config.encoder, init_rng_),
      compressor_(config.encoder, config.segments, init_rng_) {}

Tensor BottomModel::forward(const Tensor& images, Mode mode) { return compressor_.forward(encoder_.forward(images, mode)); }

void BottomModel::backward(const Tensor& grad_features) {
  const SkipSet g = compressor_.backward(grad_features);
  (void)encoder_.backward(g);
}

std::vector<LayerParams*> BottomModel::params() {
  auto out = encoder_.params();
  for (auto* p : compressor_.params()) out.push_back(p);
  return out;
}

std::vector<NamedTensor> BottomModel::tensors() { return named_tensors(params(), encoder_.buffers()); }

// --- top ------------------------------------------------------------------

TopModel::TopModel(const ModelConfig& config, std::uint64_t seed)
    : init_rng_(top_seed(seed)),
      expander_(config.decoder, config.segments, init_rng_),
      decoder_(config.decoder, init_rng_) {}

Tensor TopModel::forward(const Tensor& features) { return decoder_.forward(expander_.forward(features)); }

Tensor TopModel::backward(const Tensor& grad_logits) { return expander_.backward(decoder_.backward(grad_logits)); }

std::vector<LayerParams*> TopModel::params() {
  auto out = expander_.params();
  for (auto* p : decoder_.params()) out.push_back(p);
  return out;
}

std::vector<NamedTensor> TopModel::tensors() { return named_tensors(params()); }

// --- composition ----------------------------------------------------------

SegmentationModel::SegmentationModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), bottom_(config, seed), top_(config, seed) {}

std::vector<LayerParams*> SegmentationModel::params() {
  auto out = bottom_.params();
  for (auto* p : top_.params()) out.push_back(p);
  return out;
}

std::vector<NamedTensor> SegmentationModel::tensors() {
  auto out = bottom_.tensors();
  for (auto& t : top_.tensors()) out.push_back(t);
  return out;
}

Tensor SegmentationModel::predict(const Tensor& images, Mode mode) {
  return top_.forward(bottom_.forward(images, mode));
}

StepOutcome monolithic_step(SegmentationModel& model, const Tensor& images, const Tensor& masks,
                            n::Optimizer& optimizer) {
  optimizer.zero_grad();
  const Tensor features = model.bottom().forward(images, Mode::train);
  const Tensor logits = model.top().forward(features);
  auto loss = n::bce_with_logits(logits, masks);
  StepOutcome out{loss.loss, metrics::count_confusion(logits, masks)};
  const Tensor grad_features = model.top().backward(loss.grad);
  model.bottom().backward(grad_features);
  optimizer.step();
  return out;
}

}  // namespace vfis::segnet

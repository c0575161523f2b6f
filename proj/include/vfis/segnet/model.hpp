// SPDX-License-Identifier: Apache-2.0
//
// Party-level model halves and their single-process composition.
//
//   bottom:  images -> Encoder -> Compressor -> features [B, 500]
//   top:     features -> Expander -> Decoder -> logits [B, 1, H, W]
//
// Nothing but the [B, 500] features (forward) and their gradient (backward)
// passes between the halves.

#pragma once

#include <cstdint>
#include <vector>

#include "vfis/metrics/metrics.hpp"
#include "vfis/numerics/optim.hpp"
#include "vfis/segnet/compressor.hpp"
#include "vfis/segnet/decoder.hpp"
#include "vfis/segnet/encoder.hpp"

namespace vfis::segnet {

/// Parameter tensors ("<layer>/w", "<layer>/b") followed by buffers.
[[nodiscard]] std::vector<NamedTensor> named_tensors(const std::vector<LayerParams*>& params,
                                                     std::vector<NamedTensor> buffers = {});

class BottomModel {
 public:
  BottomModel(const ModelConfig& config, std::uint64_t seed);

  [[nodiscard]] Tensor forward(const Tensor& images, Mode mode);
  void backward(const Tensor& grad_features);

  [[nodiscard]] Encoder& encoder() noexcept { return encoder_; }
  [[nodiscard]] Compressor& compressor() noexcept { return compressor_; }
  [[nodiscard]] std::vector<LayerParams*> params();
  [[nodiscard]] std::vector<NamedTensor> tensors();

 private:
  numerics::Rng init_rng_;  // declared first: members below draw from it in order
  Encoder encoder_;
  Compressor compressor_;
};

class TopModel {
 public:
  TopModel(const ModelConfig& config, std::uint64_t seed);

  [[nodiscard]] Tensor forward(const Tensor& features);
  /// Returns the gradient w.r.t. the compressed features.
  [[nodiscard]] Tensor backward(const Tensor& grad_logits);

  [[nodiscard]] Expander& expander() noexcept { return expander_; }
  [[nodiscard]] Decoder& decoder() noexcept { return decoder_; }
  [[nodiscard]] std::vector<LayerParams*> params();
  [[nodiscard]] std::vector<NamedTensor> tensors();

 private:
  numerics::Rng init_rng_;
  Expander expander_;
  Decoder decoder_;
};

/// Bottom and top initialised from independent sub-streams of one seed, so
/// each party can build its half alone and still match this composition.
class SegmentationModel {
 public:
  SegmentationModel(const ModelConfig& config, std::uint64_t seed);

  [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
  [[nodiscard]] BottomModel& bottom() noexcept { return bottom_; }
  [[nodiscard]] TopModel& top() noexcept { return top_; }
  [[nodiscard]] std::vector<LayerParams*> params();
  [[nodiscard]] std::vector<NamedTensor> tensors();

  /// Forward pass without backward bookkeeping being consumed.
  [[nodiscard]] Tensor predict(const Tensor& images, Mode mode = Mode::eval);

 private:
  ModelConfig config_;
  BottomModel bottom_;
  TopModel top_;
};

[[nodiscard]] std::uint64_t bottom_seed(std::uint64_t seed) noexcept;
[[nodiscard]] std::uint64_t top_seed(std::uint64_t seed) noexcept;

struct StepOutcome {
  double loss = 0.0;
  metrics::ConfusionCounts counts;
};

/// One full training step in a single process: forward, BCE loss, complete
/// backward, optimizer update. The optimizer must cover model.params().
StepOutcome monolithic_step(SegmentationModel& model, const Tensor& images, const Tensor& masks,
                            numerics::Optimizer& optimizer);

}  // namespace vfis::segnet

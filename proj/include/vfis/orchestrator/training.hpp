// SPDX-License-Identifier: Apache-2.0
//
// Drivers: data loading per role, the in-process split session, the TCP
// roles, the monolithic reference trainer, evaluation, and the payload
// audit over recorded loopback traffic.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vfis/datasets/dataset.hpp"
#include "vfis/metrics/metrics.hpp"
#include "vfis/orchestrator/config.hpp"
#include "vfis/orchestrator/parties.hpp"
#include "vfis/orchestrator/transport.hpp"

namespace vfis::orchestrator {

[[nodiscard]] segnet::ModelConfig model_config(const PartyConfig& cfg);
/// Settings for one side; `bottom` selects the checkpoint path.
[[nodiscard]] SessionSettings session_settings(const PartyConfig& cfg, bool bottom);

struct DataStores {
  datasets::TensorStore images;
  datasets::TensorStore masks;
};

/// Loads (or synthesises) the data resized to the model input size. Only
/// the requested halves are kept.
[[nodiscard]] DataStores load_data(const PartyConfig& cfg, bool want_images, bool want_masks);

/// Key file, else $VFIS_KEY, else (only when `allow_random`) a fresh random
/// key, which is fine when both parties live in one process.
[[nodiscard]] protocol::Key resolve_key(const PartyConfig& cfg, bool allow_random);

/// Both parties in one process over a LoopbackLink, the top on a second
/// thread. If either side fails the link is closed and the first failure
/// is rethrown.
class LoopbackSession {
 public:
  LoopbackSession(const PartyConfig& cfg, const datasets::TensorStore& images, const datasets::TensorStore& masks,
                  const protocol::Key& key, metrics::MetricsLog* log = nullptr);

  void run(const PartyHooks& bottom_hooks = {}, const PartyHooks& top_hooks = {});

  [[nodiscard]] BottomParty& bottom() noexcept { return bottom_; }
  [[nodiscard]] TopParty& top() noexcept { return top_; }
  [[nodiscard]] LoopbackLink& link() noexcept { return link_; }
  [[nodiscard]] const protocol::Key& key() const noexcept { return key_; }

 private:
  protocol::Key key_;
  LoopbackLink link_;
  BottomParty bottom_;
  TopParty top_;
};

struct RunReport {
  std::uint32_t epochs_completed = 0;
  std::size_t steps = 0;
  std::vector<metrics::BatchMetrics> history;  // top side only
};

/// The complete `train` command for any role: data, session, checkpoints,
/// metrics log and CSV/SVG reports under cfg.out.
RunReport run_training(const PartyConfig& cfg);

/// Single-process reference: one optimizer over the full model, stepping
/// through the same schedule as the split parties.
class MonolithicTrainer {
 public:
  MonolithicTrainer(const segnet::ModelConfig& model, std::uint64_t seed, const numerics::OptimizerSettings& opt);

  using StepHook = std::function<void(std::uint32_t epoch, std::uint32_t step, const segnet::StepOutcome&)>;
  void train(const DataStores& data, std::uint32_t batch, std::uint32_t first_epoch, std::uint32_t end_epoch,
             const StepHook& hook = {});

  [[nodiscard]] segnet::SegmentationModel& model() noexcept { return model_; }
  [[nodiscard]] numerics::Optimizer& optimizer() noexcept { return optimizer_; }

 private:
  std::uint64_t seed_;
  segnet::SegmentationModel model_;
  numerics::Optimizer optimizer_;
};

struct EvalReport {
  metrics::ConfusionCounts counts;
  double pixel_accuracy = 0.0;  // micro over all pixels
  double iou = 0.0;             // micro
  double mean_image_iou = 0.0;  // macro over images
  std::vector<std::uint64_t> ids;
  std::vector<double> image_iou;
};

/// Eval-mode inference over every id present in both stores.
[[nodiscard]] EvalReport evaluate(segnet::SegmentationModel& model, const datasets::TensorStore& images,
                                  const datasets::TensorStore& masks, std::size_t batch = 8);

/// Checkpoint directory (bottom.ckpt + top.ckpt) or one file holding both
/// halves. Builds the model recorded in the checkpoint.
[[nodiscard]] std::unique_ptr<segnet::SegmentationModel> load_model(const std::filesystem::path& checkpoint);

struct AuditReport {
  std::size_t frames = 0;
  std::size_t batch_frames = 0;
  std::vector<std::string> violations;
  [[nodiscard]] bool ok() const noexcept { return violations.empty() && frames > 0; }
};

/// Opens every recorded frame in order and checks: allowed message type for
/// the direction, exact batch payload sizes, and that no run of image pixels
/// (bottom->top) or mask pixels (top->bottom) appears in any payload, as
/// 8-byte doubles or as raw 8-bit samples.
[[nodiscard]] AuditReport audit_frames(const std::vector<RecordedFrame>& frames, const protocol::Key& key,
                                       const datasets::TensorStore& images, const datasets::TensorStore& masks,
                                       std::size_t batch, std::size_t features, std::uint8_t float_width = 8);

}  // namespace vfis::orchestrator

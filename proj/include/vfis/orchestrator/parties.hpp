// SPDX-License-Identifier: Apache-2.0
//
// The two party state machines. Per step, in lockstep:
//
//   bottom                                  top
//   images -> encoder -> compressor
//   BATCH_ACTIVATIONS  ------------------>  expander -> decoder -> BCE(masks)
//                      <------------------  BATCH_GRADIENTS
//   compressor/encoder backward, step       step
//
// Session start: HELLO both ways (top checks every negotiated field), then
// ALIGN_REQUEST (bottom ids) / ALIGN_RESPONSE (intersection). The run ends
// with SHUTDOWN from the bottom. Each party checkpoints at every epoch end.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vfis/datasets/dataset.hpp"
#include "vfis/metrics/log.hpp"
#include "vfis/numerics/optim.hpp"
#include "vfis/orchestrator/channel.hpp"
#include "vfis/orchestrator/schedule.hpp"
#include "vfis/protocol/messages.hpp"
#include "vfis/segnet/model.hpp"

namespace vfis::orchestrator {

using numerics::Tensor;

struct SessionSettings {
  segnet::ModelConfig model;
  std::uint32_t batch_size = 8;
  std::uint64_t seed = 0;
  std::uint32_t epochs = 1;
  std::uint8_t float_width = 8;
  bool report_metrics = false;
  numerics::OptimizerSettings optimizer;
  std::filesystem::path checkpoint;  // empty: never written
  bool resume = false;
  std::uint32_t stop_after = 0;      // 0: run all epochs
  std::filesystem::path init_weights;  // bottom only: imported before training unless resuming

  /// Last epoch (exclusive) this run will execute.
  [[nodiscard]] std::uint32_t end_epoch() const noexcept {
    return stop_after != 0 && stop_after < epochs ? stop_after : epochs;
  }
};

struct PartyHooks {
  std::function<void(std::uint32_t epoch, std::uint32_t step)> after_step;
  std::function<void(std::uint32_t epoch)> after_epoch;
};

/// Name of the first negotiated field on which the two HELLOs differ.
[[nodiscard]] std::optional<std::string> hello_mismatch(const protocol::Hello& local, const protocol::Hello& peer);

/// BLAKE2b-256 over names, extents and raw element bytes.
[[nodiscard]] std::string digest_tensors(const std::vector<numerics::NamedTensor>& tensors);

class BottomParty {
 public:
  BottomParty(SessionSettings settings, const datasets::TensorStore& images);

  void run(SecureChannel& channel, const PartyHooks& hooks = {});

  [[nodiscard]] segnet::BottomModel& model() noexcept { return model_; }
  [[nodiscard]] numerics::Optimizer& optimizer() noexcept { return optimizer_; }
  [[nodiscard]] std::uint32_t next_epoch() const noexcept { return next_epoch_; }
  [[nodiscard]] const std::vector<std::uint64_t>& aligned() const noexcept { return aligned_; }
  [[nodiscard]] const std::vector<protocol::MetricsReport>& reports() const noexcept { return reports_; }
  /// Model tensors, optimizer state and bookkeeping, as checkpointed.
  [[nodiscard]] std::vector<numerics::NamedTensor> state();
  void save();

 private:
  [[nodiscard]] protocol::Hello hello() const;

  SessionSettings s_;
  const datasets::TensorStore& images_;
  segnet::BottomModel model_;
  numerics::Optimizer optimizer_;
  Tensor meta_;
  std::uint32_t next_epoch_ = 0;
  std::vector<std::uint64_t> aligned_;
  std::vector<protocol::MetricsReport> reports_;
};

class TopParty {
 public:
  /// `log` may be null; otherwise one record is appended per step.
  TopParty(SessionSettings settings, const datasets::TensorStore& masks, metrics::MetricsLog* log = nullptr);

  void run(SecureChannel& channel, const PartyHooks& hooks = {});

  [[nodiscard]] segnet::TopModel& model() noexcept { return model_; }
  [[nodiscard]] numerics::Optimizer& optimizer() noexcept { return optimizer_; }
  [[nodiscard]] std::uint32_t next_epoch() const noexcept { return next_epoch_; }
  [[nodiscard]] const std::vector<metrics::BatchMetrics>& history() const noexcept { return history_; }
  [[nodiscard]] std::vector<numerics::NamedTensor> state();
  void save();

 private:
  [[nodiscard]] protocol::Hello hello() const;

  SessionSettings s_;
  const datasets::TensorStore& masks_;
  metrics::MetricsLog* log_;
  segnet::TopModel model_;
  numerics::Optimizer optimizer_;
  Tensor meta_;
  std::uint32_t next_epoch_ = 0;
  std::vector<metrics::BatchMetrics> history_;
};

/// Rebuilds the model configuration recorded in a party checkpoint.
[[nodiscard]] segnet::ModelConfig model_config_from(const std::filesystem::path& checkpoint);

}  // namespace vfis::orchestrator

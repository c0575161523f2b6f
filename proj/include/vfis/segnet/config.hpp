// SPDX-License-Identifier: Apache-2.0
//
// Model presets. "vgg16" follows the VGG16 backbone at 128x128; "tiny" is a
// narrow desk-scale variant with the same five-stage topology.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>

#include "vfis/numerics/tensor.hpp"

namespace vfis::segnet {

inline constexpr std::size_t kStages = 5;

using numerics::Tensor;

/// Five stages of (3x3 conv [+ batch-norm] + ReLU) x n, each closed by a
/// 2x2 stride-2 max-pool whose output is kept as a skip.
struct EncoderConfig {
  std::string preset;
  std::size_t in_channels = 3;
  std::size_t height = 0;
  std::size_t width = 0;
  std::array<std::size_t, kStages> convs_per_stage{};
  std::array<std::size_t, kStages> widths{};
  bool batchnorm = true;

  void validate() const;
  /// Per-sample extents [C, H, W] of stage `i`'s pooled output (0-based).
  [[nodiscard]] Tensor::Shape skip_shape(std::size_t stage) const;
  [[nodiscard]] std::size_t input_features() const noexcept { return in_channels * height * width; }
};

/// Partition of the compressed feature vector, shallowest stage first.
struct SegmentLayout {
  std::array<std::size_t, kStages> lengths{25, 50, 75, 150, 200};

  [[nodiscard]] std::size_t total() const noexcept;
  [[nodiscard]] std::size_t offset(std::size_t stage) const noexcept;
  void validate() const;

  /// Scale the 25/50/75/150/200 proportions to `total` features (>= 5,
  /// every segment >= 1, remainder assigned to the deepest segment).
  [[nodiscard]] static SegmentLayout scaled(std::size_t total);

  friend bool operator==(const SegmentLayout&, const SegmentLayout&) = default;
};

/// One tensor per encoder stage, shallowest first, each [B, C, H/2^i, W/2^i].
struct SkipSet {
  std::array<Tensor, kStages> stages;
};

struct DecoderConfig {
  std::array<Tensor::Shape, kStages> skip_shapes;  // must equal the encoder's
  std::array<std::size_t, kStages> widths{};       // output channels of each up-step
  std::size_t kernel = 4;
  std::size_t stride = 2;
  std::size_t pad = 1;
  std::size_t out_height = 0;
  std::size_t out_width = 0;

  void validate() const;
};

struct ModelConfig {
  EncoderConfig encoder;
  SegmentLayout segments;
  DecoderConfig decoder;

  [[nodiscard]] const std::string& preset() const noexcept { return encoder.preset; }
  void validate() const;
};

/// Builds a named preset. `features` rescales the segment layout (defaults
/// to the 500-feature partition); `batchnorm` overrides the preset default.
[[nodiscard]] ModelConfig make_preset(const std::string& name, std::optional<std::size_t> features = std::nullopt,
                                      std::optional<bool> batchnorm = std::nullopt);

}  // namespace vfis::segnet

// SPDX-License-Identifier: Apache-2.0
//
// Binary segmentation metrics. A pixel is predicted positive when its logit
// exceeds the threshold (default 0, i.e. probability 0.5). All counting is
// integer; the only floating-point operation is the final division.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vfis/numerics/tensor.hpp"

namespace vfis::metrics {

using numerics::Tensor;

struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  [[nodiscard]] std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

enum class Aggregation { micro, macro };

/// Throws DimensionError on shape mismatch, ValidationError on a non-binary mask.
[[nodiscard]] ConfusionCounts count_confusion(const Tensor& logits, const Tensor& mask, double threshold = 0.0);

[[nodiscard]] double pixel_accuracy(const ConfusionCounts& c) noexcept;
/// |pred ∩ mask| / |pred ∪ mask|; defined as 1 when both are empty.
[[nodiscard]] double jaccard(const ConfusionCounts& c) noexcept;

[[nodiscard]] double pixel_accuracy(const Tensor& logits, const Tensor& mask, double threshold = 0.0);
/// Micro sums counts over the whole batch; macro averages per-image IoU over
/// the leading axis.
[[nodiscard]] double jaccard_iou(const Tensor& logits, const Tensor& mask, double threshold = 0.0,
                                 Aggregation aggregation = Aggregation::micro);

/// Per-batch validation record, one JSON line in the metrics log.
struct BatchMetrics {
  std::uint32_t epoch = 0;
  std::uint64_t step = 0;  // global, 1-based
  std::vector<std::uint64_t> sample_ids;
  double loss = 0.0;
  double pixel_accuracy = 0.0;
  double iou = 0.0;
  std::int64_t timestamp = 0;  // unix milliseconds

  void validate() const;
  friend bool operator==(const BatchMetrics&, const BatchMetrics&) = default;
};

[[nodiscard]] std::int64_t now_unix_ms() noexcept;

}  // namespace vfis::metrics

// SPDX-License-Identifier: Apache-2.0

#include "vfis/metrics/metrics.hpp"

#include <chrono>

#include "vfis/errors.hpp"

namespace vfis::metrics {

ConfusionCounts count_confusion(const Tensor& logits, const Tensor& mask, double threshold) {
  numerics::require_shape(mask, logits.shape(), "metrics mask");
  ConfusionCounts c;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double t = mask[i];
    if (t != 0.0 && t != 1.0) throw ValidationError("metrics: mask value " + std::to_string(t) + " is not binary");
    const bool pred = logits[i] > threshold;
    const bool truth = t == 1.0;
    if (pred && truth) ++c.tp;
    else if (!pred && !truth) ++c.tn;
    else if (pred) ++c.fp;
    else ++c.fn;
  }
  return c;
}

double pixel_accuracy(const ConfusionCounts& c) noexcept {
  const auto total = c.total();
  return total == 0 ? 1.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

double jaccard(const ConfusionCounts& c) noexcept {
  const auto uni = c.tp + c.fp + c.fn;
  return uni == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(uni);
}

double pixel_accuracy(const Tensor& logits, const Tensor& mask, double threshold) {
  return pixel_accuracy(count_confusion(logits, mask, threshold));
}

double jaccard_iou(const Tensor& logits, const Tensor& mask, double threshold, Aggregation aggregation) {
  if (aggregation == Aggregation::micro) return jaccard(count_confusion(logits, mask, threshold));
  numerics::require_shape(mask, logits.shape(), "metrics mask");
  const std::size_t n = logits.dim(0);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += jaccard(count_confusion(logits.slice_batch(i, 1), mask.slice_batch(i, 1), threshold));
  }
  return acc / static_cast<double>(n);
}

void BatchMetrics::validate() const {
  if (sample_ids.empty()) throw ValidationError("batch metrics: sample ids must be nonempty");
  auto rate = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string("batch metrics: ") + what + " outside [0,1]");
  };
  rate(pixel_accuracy, "pixel_accuracy");
  rate(iou, "iou");
}

std::int64_t now_unix_ms() noexcept {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace vfis::metrics

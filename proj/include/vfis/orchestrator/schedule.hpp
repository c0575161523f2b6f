// SPDX-License-Identifier: Apache-2.0
//
// Batch order as a pure function of (seed, epoch, aligned ids): a
// Fisher-Yates shuffle driven by a per-epoch sub-stream, cut into full
// batches. The trailing partial batch is dropped so every step sees exactly
// `batch` samples.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vfis::orchestrator {

using BatchIds = std::vector<std::uint64_t>;

[[nodiscard]] std::vector<std::uint64_t> shuffled_ids(std::uint64_t seed, std::uint32_t epoch,
                                                      std::span<const std::uint64_t> aligned);
[[nodiscard]] std::vector<BatchIds> batch_schedule(std::uint64_t seed, std::uint32_t epoch,
                                                   std::span<const std::uint64_t> aligned, std::size_t batch);
[[nodiscard]] std::size_t steps_per_epoch(std::size_t samples, std::size_t batch);

}  // namespace vfis::orchestrator

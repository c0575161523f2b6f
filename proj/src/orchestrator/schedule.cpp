// SPDX-License-Identifier: Apache-2.0

#include "vfis/orchestrator/schedule.hpp"

#include <utility>

#include "vfis/errors.hpp"
#include "vfis/numerics/rng.hpp"

namespace vfis::orchestrator {

namespace {
constexpr std::uint64_t kScheduleStream = 3;
}

std::vector<std::uint64_t> shuffled_ids(std::uint64_t seed, std::uint32_t epoch,
                                        std::span<const std::uint64_t> aligned) {
  std::vector<std::uint64_t> ids(aligned.begin(), aligned.end());
  numerics::Rng rng(numerics::derive_seed(numerics::derive_seed(seed, kScheduleStream), epoch));
  for (std::size_t i = ids.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(ids[i - 1], ids[j]);
  }
  return ids;
}

std::size_t steps_per_epoch(std::size_t samples, std::size_t batch) {
  if (batch == 0) throw ConfigError("batch size must be positive");
  return samples / batch;
}

std::vector<BatchIds> batch_schedule(std::uint64_t seed, std::uint32_t epoch, std::span<const std::uint64_t> aligned,
                                     std::size_t batch) {
  const auto ids = shuffled_ids(seed, epoch, aligned);
  const std::size_t steps = steps_per_epoch(ids.size(), batch);
  std::vector<BatchIds> out(steps);
  for (std::size_t s = 0; s < steps; ++s) out[s].assign(ids.begin() + s * batch, ids.begin() + (s + 1) * batch);
  return out;
}

}  // namespace vfis::orchestrator

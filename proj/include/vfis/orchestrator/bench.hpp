// SPDX-License-Identifier: Apache-2.0
//
// Communication benchmark: real split training steps over the loopback link
// for each boundary feature count. Byte counts are exact and deterministic;
// timings are wall clock.

#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "vfis/orchestrator/config.hpp"

namespace vfis::orchestrator {

struct BenchRow {
  std::size_t features = 0;
  std::size_t activation_payload = 0;  // plaintext BATCH_ACTIVATIONS payload
  std::size_t activation_frame = 0;    // sealed frame on the wire
  std::size_t gradient_frame = 0;
  std::size_t bytes_per_step = 0;      // both directions
  std::size_t steps = 0;
  double seconds = 0.0;
  double steps_per_second = 0.0;
  std::size_t steps_per_epoch = 0;     // for cfg's dataset size
  std::size_t bytes_per_epoch = 0;
};

/// Throws ConfigError for a feature count below 5.
[[nodiscard]] std::vector<BenchRow> bench_comm(const PartyConfig& cfg, std::span<const std::size_t> feature_counts,
                                               std::size_t steps = 3);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

struct AffineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares y = slope * x + intercept.
[[nodiscard]] AffineFit affine_fit(std::span<const double> x, std::span<const double> y);

}  // namespace vfis::orchestrator

// SPDX-License-Identifier: Apache-2.0
//
// The gradient oracle suite: every hand-written backward pass against
// central finite differences, per layer op and for the whole tiny model.
//
// Layer ops use the scalar L = sum(out * R) for a random R and check every
// element of every input. The full model uses its real BCE loss; each
// parameter tensor is checked along a random unit direction and at its
// largest-magnitude gradient element.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vfis::segnet {

struct GradCheckResult {
  std::string name;
  std::uint64_t seed = 0;
  double max_relative_error = 0.0;
  std::size_t comparisons = 0;
  std::size_t redrawn = 0;  // probes discarded for straddling a ReLU/pool branch change
  double seconds = 0.0;
  bool passed = false;
};

inline constexpr double kGradTolerance = 1e-5;

[[nodiscard]] std::vector<std::string> gradcheck_case_names();

/// Runs one named case ("conv2d", ..., "model:tiny").
[[nodiscard]] GradCheckResult run_gradcheck_case(const std::string& name, std::uint64_t seed,
                                                 double tolerance = kGradTolerance);

using GradCheckObserver = std::function<void(const GradCheckResult&)>;

[[nodiscard]] std::vector<GradCheckResult> run_gradcheck_suite(std::span<const std::uint64_t> seeds,
                                                               double tolerance = kGradTolerance,
                                                               const GradCheckObserver& observer = {});

}  // namespace vfis::segnet

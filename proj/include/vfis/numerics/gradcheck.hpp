// SPDX-License-Identifier: Apache-2.0
//
// Central finite differences, used as the independent oracle for every
// hand-written backward pass.

#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "vfis/numerics/tensor.hpp"

namespace vfis::numerics {

using ScalarFn = std::function<double(const Tensor&)>;

inline constexpr double kDefaultFdStep = 1e-6;

/// (f(x + h e_i) - f(x - h e_i)) / 2h for every element i.
[[nodiscard]] Tensor finite_difference_grad(const ScalarFn& f, const Tensor& x, double h = kDefaultFdStep);

/// Same, restricted to a subset of flat indices (other entries are zero).
[[nodiscard]] Tensor finite_difference_grad(const ScalarFn& f, const Tensor& x, std::span<const std::size_t> indices,
                                            double h = kDefaultFdStep);

/// Directional derivative of f at x along `direction` by central differences.
[[nodiscard]] double finite_difference_directional(const ScalarFn& f, const Tensor& x, const Tensor& direction,
                                                   double h = kDefaultFdStep);

/// Magnitude floor below which gradients are compared absolutely. Components
/// this small are dominated by the O(eps * |f| / h) rounding of the
/// difference quotient.
inline constexpr double kRelativeErrorFloor = 1e-3;

/// |a - b| / max(|a|, |b|, floor).
[[nodiscard]] double relative_error(double a, double b, double floor = kRelativeErrorFloor) noexcept;

/// Largest relative_error over all elements (shapes must match).
[[nodiscard]] double max_relative_error(const Tensor& analytic, const Tensor& numeric,
                                        double floor = kRelativeErrorFloor);

}  // namespace vfis::numerics

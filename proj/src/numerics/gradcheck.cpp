// SPDX-License-Identifier: Apache-2.0

#include "vfis/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vfis/errors.hpp"

namespace vfis::numerics {

namespace {
double central_difference(const ScalarFn& f, Tensor& probe, std::size_t i, double h) {
  const double orig = probe[i];
  probe[i] = orig + h;
  const double up = f(probe);
  probe[i] = orig - h;
  const double down = f(probe);
  probe[i] = orig;
  return (up - down) / (2.0 * h);
}
}  // namespace

Tensor finite_difference_grad(const ScalarFn& f, const Tensor& x, double h) {
  Tensor probe = x;
  Tensor grad = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) grad[i] = central_difference(f, probe, i, h);
  return grad;
}

Tensor finite_difference_grad(const ScalarFn& f, const Tensor& x, std::span<const std::size_t> indices, double h) {
  Tensor probe = x;
  Tensor grad = Tensor::zeros_like(x);
  for (std::size_t i : indices) {
    if (i >= x.size()) throw DimensionError("finite_difference_grad: index out of range");
    grad[i] = central_difference(f, probe, i, h);
  }
  return grad;
}

double finite_difference_directional(const ScalarFn& f, const Tensor& x, const Tensor& direction, double h) {
  require_shape(direction, x.shape(), "finite_difference_directional direction");
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] + h * direction[i];
  const double up = f(probe);
  for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] - h * direction[i];
  const double down = f(probe);
  return (up - down) / (2.0 * h);
}

double relative_error(double a, double b, double floor) noexcept {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
  require_shape(numeric, analytic.shape(), "max_relative_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
  return worst;
}

}  // namespace vfis::numerics

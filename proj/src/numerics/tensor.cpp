// SPDX-License-Identifier: Apache-2.0

#include "vfis/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "vfis/errors.hpp"

namespace vfis::numerics {

std::size_t element_count(const Tensor::Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
    n *= e;
  }
  return n;
}

std::string shape_string(const Tensor::Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  if (shape_.empty()) throw DimensionError("tensor needs at least one extent");
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw DimensionError("tensor needs at least one extent");
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
  }
  return shape_[axis];
}

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

void Tensor::reshape(Shape shape) {
  if (shape.empty() || element_count(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor t = *this;
  t.reshape(std::move(shape));
  return t;
}

Tensor Tensor::slice_batch(std::size_t first, std::size_t count) const {
  if (shape_.empty() || count == 0 || first + count > shape_[0]) {
    throw DimensionError("batch slice out of range for shape " + shape_string(shape_));
  }
  const std::size_t stride = data_.size() / shape_[0];
  Shape s = shape_;
  s[0] = count;
  std::vector<double> d(data_.begin() + static_cast<std::ptrdiff_t>(first * stride),
                        data_.begin() + static_cast<std::ptrdiff_t>((first + count) * stride));
  return Tensor(std::move(s), std::move(d));
}

void require_shape(const Tensor& t, const Tensor::Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw DimensionError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                         shape_string(t.shape()));
  }
}

bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
  return a.shape() == b.shape() && a.size() == b.size() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sum(const Tensor& t) noexcept {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s;
}

bool all_finite(const Tensor& t) noexcept {
  return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

Tensor stack(std::span<const Tensor* const> items) {
  if (items.empty()) throw DimensionError("stack: no tensors");
  const auto& s0 = items.front()->shape();
  Tensor::Shape shape{items.size()};
  shape.insert(shape.end(), s0.begin(), s0.end());
  Tensor out(shape);
  const std::size_t stride = items.front()->size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    require_shape(*items[i], s0, "stack");
    std::copy_n(items[i]->data(), stride, out.data() + i * stride);
  }
  return out;
}

}  // namespace vfis::numerics

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vfis::numerics {

/// Dense row-major array of binary64 values. Every extent is positive; a
/// default-constructed tensor is the distinguished "empty" tensor (no shape,
/// no data) used for absent biases.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
  [[nodiscard]] std::size_t dim(std::size_t axis) const;
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] double* data() noexcept { return data_.data(); }
  [[nodiscard]] const double* data() const noexcept { return data_.data(); }
  [[nodiscard]] std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  /// 4-D element access for [N, C, H, W] tensors.
  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(double value) noexcept;
  /// Reinterpret the extents; element count must be preserved.
  void reshape(Shape shape);
  [[nodiscard]] Tensor reshaped(Shape shape) const;

  /// Copy of samples [first, first + count) along axis 0.
  [[nodiscard]] Tensor slice_batch(std::size_t first, std::size_t count) const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Non-owning named reference, used to enumerate checkpointable state.
struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

[[nodiscard]] std::size_t element_count(const Tensor::Shape& shape);
[[nodiscard]] std::string shape_string(const Tensor::Shape& shape);

/// Throws DimensionError naming `what` unless the shapes match.
void require_shape(const Tensor& t, const Tensor::Shape& expected, const char* what);

/// True when shapes match and every element has an identical bit pattern.
[[nodiscard]] bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept;

[[nodiscard]] double dot(const Tensor& a, const Tensor& b);
[[nodiscard]] double sum(const Tensor& t) noexcept;
[[nodiscard]] bool all_finite(const Tensor& t) noexcept;

/// Stack tensors of identical shape along a new leading axis.
[[nodiscard]] Tensor stack(std::span<const Tensor* const> items);

}  // namespace vfis::numerics

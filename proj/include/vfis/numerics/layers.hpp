// SPDX-License-Identifier: Apache-2.0
//
// Differentiable layer operations with hand-written backward passes.
//
// Layout conventions (all row-major):
//   activations         [B, C, H, W]
//   conv2d weights      [Cout, Cin, K, K], bias [Cout]
//   conv_transpose2d    [Cin, Cout, K, K], bias [Cout]   (same memory as the
//                        conv2d kernel it is the adjoint of)
//   linear weights      [Out, In], bias [Out]
//
// Backward functions accumulate (+=) into LayerParams gradients and return the
// gradient with respect to the layer input.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vfis/numerics/rng.hpp"
#include "vfis/numerics/tensor.hpp"

namespace vfis::numerics {

struct LayerParams {
  std::string name;
  Tensor weights;
  Tensor bias;  // may be empty
  Tensor grad_weights;
  Tensor grad_bias;

  LayerParams() = default;
  LayerParams(std::string name, Tensor w, Tensor b);

  void zero_grad() noexcept;
  [[nodiscard]] std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }
};

// --- initialisation -------------------------------------------------------

/// He-normal weights (std = sqrt(2 / fan_in)), zero bias.
void init_he_normal(LayerParams& p, std::size_t fan_in, Rng& rng);
/// Xavier-uniform weights (limit = sqrt(6 / (fan_in + fan_out))), zero bias.
void init_xavier_uniform(LayerParams& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

[[nodiscard]] LayerParams make_conv2d(std::string name, std::size_t cin, std::size_t cout, std::size_t kernel,
                                      Rng& rng);
[[nodiscard]] LayerParams make_conv_transpose2d(std::string name, std::size_t cin, std::size_t cout,
                                                std::size_t kernel, std::size_t stride, Rng& rng);
[[nodiscard]] LayerParams make_linear(std::string name, std::size_t in, std::size_t out, Rng& rng);

// --- convolution ----------------------------------------------------------

/// Output extent of a convolution; throws DimensionError unless
/// (in + 2*pad - kernel) is a non-negative multiple of stride.
[[nodiscard]] std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                          std::size_t pad);
[[nodiscard]] std::size_t conv_transpose_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                                    std::size_t pad);

/// Cross-correlation.
[[nodiscard]] Tensor conv2d_forward(const Tensor& input, const LayerParams& params, std::size_t stride,
                                    std::size_t pad);
[[nodiscard]] Tensor conv2d_backward(const Tensor& grad_out, const Tensor& saved_input, LayerParams& params,
                                     std::size_t stride, std::size_t pad);

[[nodiscard]] Tensor conv_transpose2d_forward(const Tensor& input, const LayerParams& params, std::size_t stride,
                                              std::size_t pad);
[[nodiscard]] Tensor conv_transpose2d_backward(const Tensor& grad_out, const Tensor& saved_input,
                                               LayerParams& params, std::size_t stride, std::size_t pad);

// --- pooling --------------------------------------------------------------

/// Flat index (into the pooled input tensor) of each output element's argmax.
struct PoolIndices {
  Tensor::Shape input_shape;
  std::vector<std::size_t> argmax;
};

struct PoolResult {
  Tensor output;
  PoolIndices indices;
};

/// Ties resolve to the lowest flat index within the window.
[[nodiscard]] PoolResult maxpool2d_forward(const Tensor& input, std::size_t window, std::size_t stride);
[[nodiscard]] Tensor maxpool2d_backward(const Tensor& grad_out, const PoolIndices& indices,
                                        const Tensor::Shape& input_shape);

// --- batch normalisation --------------------------------------------------

enum class Mode { train, eval };

struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(std::size_t channels = 1);
};

struct BatchNormCache {
  Mode mode = Mode::train;
  Tensor normalized;            // x_hat
  std::vector<double> inv_std;  // per channel
};

/// params.weights is gamma [C], params.bias is beta [C]. Train mode normalises
/// with biased batch statistics and folds the unbiased variance into the
/// running estimate.
[[nodiscard]] LayerParams make_batchnorm2d(std::string name, std::size_t channels);
[[nodiscard]] Tensor batchnorm2d_forward(const Tensor& input, const LayerParams& params, BatchNormState& state,
                                         Mode mode, BatchNormCache& cache);
[[nodiscard]] Tensor batchnorm2d_backward(const Tensor& grad_out, const BatchNormCache& cache,
                                          LayerParams& params);

// --- pointwise, dense, reshaping ------------------------------------------

[[nodiscard]] Tensor relu_forward(const Tensor& input);
/// FNV-1a fold of the sign pattern (x > 0) of a ReLU input into `h`.
[[nodiscard]] std::uint64_t fold_relu_pattern(std::uint64_t h, const Tensor& relu_input) noexcept;
[[nodiscard]] std::uint64_t fold_pool_pattern(std::uint64_t h, const PoolIndices& indices) noexcept;
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
[[nodiscard]] Tensor relu_backward(const Tensor& grad_out, const Tensor& saved_input);

/// input [B, In] -> [B, Out]
[[nodiscard]] Tensor linear_forward(const Tensor& input, const LayerParams& params);
[[nodiscard]] Tensor linear_backward(const Tensor& grad_out, const Tensor& saved_input, LayerParams& params);

/// [B, ...] -> [B, prod(...)]
[[nodiscard]] Tensor flatten(const Tensor& input);
/// [B, prod(sample_shape)] -> [B, sample_shape...]
[[nodiscard]] Tensor unflatten(const Tensor& input, const Tensor::Shape& sample_shape);

// --- loss -----------------------------------------------------------------

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

/// Mean binary cross-entropy on logits, computed in the overflow-free form
/// max(z,0) - z*t + log1p(exp(-|z|)). Targets must be exactly 0 or 1.
[[nodiscard]] LossResult bce_with_logits(const Tensor& logits, const Tensor& targets);

[[nodiscard]] double sigmoid(double z) noexcept;

}  // namespace vfis::numerics

// SPDX-License-Identifier: Apache-2.0

#include "vfis/numerics/layers.hpp"

#include <algorithm>
#include <cmath>

#include "vfis/errors.hpp"

namespace vfis::numerics {

LayerParams::LayerParams(std::string n, Tensor w, Tensor b)
    : name(std::move(n)), weights(std::move(w)), bias(std::move(b)) {
  grad_weights = Tensor::zeros_like(weights);
  if (!bias.empty()) grad_bias = Tensor::zeros_like(bias);
}

void LayerParams::zero_grad() noexcept {
  grad_weights.fill(0.0);
  grad_bias.fill(0.0);
}

void init_he_normal(LayerParams& p, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& w : p.weights.values()) w = rng.normal(0.0, stddev);
  p.bias.fill(0.0);
}

void init_xavier_uniform(LayerParams& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : p.weights.values()) w = rng.uniform(-limit, limit);
  p.bias.fill(0.0);
}

LayerParams make_conv2d(std::string name, std::size_t cin, std::size_t cout, std::size_t kernel, Rng& rng) {
  LayerParams p(std::move(name), Tensor({cout, cin, kernel, kernel}), Tensor({cout}));
  init_he_normal(p, cin * kernel * kernel, rng);
  return p;
}

LayerParams make_conv_transpose2d(std::string name, std::size_t cin, std::size_t cout, std::size_t kernel,
                                  std::size_t stride, Rng& rng) {
  LayerParams p(std::move(name), Tensor({cin, cout, kernel, kernel}), Tensor({cout}));
  // Each output pixel receives cin * (kernel/stride)^2 contributions.
  const std::size_t taps = std::max<std::size_t>(1, (kernel * kernel) / (stride * stride));
  init_he_normal(p, cin * taps, rng);
  return p;
}

LayerParams make_linear(std::string name, std::size_t in, std::size_t out, Rng& rng) {
  LayerParams p(std::move(name), Tensor({out, in}), Tensor({out}));
  init_xavier_uniform(p, in, out, rng);
  return p;
}

// --------------------------------------------------------------------------
// Convolution core. A conv maps planes [C, H, W] to [O, Ho, Wo] through the
// column matrix cols[C*K*K, Ho*Wo]; the transpose conv reuses the same
// geometry with roles swapped.

namespace {

struct ConvGeometry {
  std::size_t channels, height, width;  // the "image" side
  std::size_t kernel, stride, pad;
  std::size_t out_h, out_w;             // the "feature" side

  [[nodiscard]] std::size_t rows() const noexcept { return channels * kernel * kernel; }
  [[nodiscard]] std::size_t cols() const noexcept { return out_h * out_w; }
  [[nodiscard]] std::size_t plane() const noexcept { return channels * height * width; }
  [[nodiscard]] bool is_pointwise() const noexcept { return kernel == 1 && stride == 1 && pad == 0; }
};

ConvGeometry make_geometry(std::size_t channels, std::size_t h, std::size_t w, std::size_t kernel,
                           std::size_t stride, std::size_t pad) {
  return {channels, h, w, kernel, stride, pad, conv_out_extent(h, kernel, stride, pad),
          conv_out_extent(w, kernel, stride, pad)};
}

void im2col(const ConvGeometry& g, const double* image, double* cols) {
  const std::size_t ncols = g.cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t kh = 0; kh < g.kernel; ++kh) {
      for (std::size_t kw = 0; kw < g.kernel; ++kw) {
        double* row = cols + ((c * g.kernel + kh) * g.kernel + kw) * ncols;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.stride + kh) - static_cast<std::ptrdiff_t>(g.pad);
          double* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill_n(dst, g.out_w, 0.0);
            continue;
          }
          const double* src = image + (c * g.height + static_cast<std::size_t>(ih)) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.stride + kw) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.width)) ? 0.0 : src[iw];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* cols, double* image) {
  const std::size_t ncols = g.cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t kh = 0; kh < g.kernel; ++kh) {
      for (std::size_t kw = 0; kw < g.kernel; ++kw) {
        const double* row = cols + ((c * g.kernel + kh) * g.kernel + kw) * ncols;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.stride + kh) - static_cast<std::ptrdiff_t>(g.pad);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) continue;
          double* dst = image + (c * g.height + static_cast<std::size_t>(ih)) * g.width;
          const double* src = row + oh * g.out_w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.stride + kw) - static_cast<std::ptrdiff_t>(g.pad);
            if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.width)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

constexpr std::size_t kTile = 256;

// out[M,N] += a[M,K] * b[K,N]
void gemm_nn_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* out) {
  for (std::size_t n0 = 0; n0 < n; n0 += kTile) {
    const std::size_t len = std::min(kTile, n - n0);
    for (std::size_t i = 0; i < m; ++i) {
      double* o = out + i * n + n0;
      const double* arow = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* brow = b + p * n + n0;
        for (std::size_t j = 0; j < len; ++j) o[j] += av * brow[j];
      }
    }
  }
}

// out[K,N] += a[M,K]^T * b[M,N]
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* out) {
  for (std::size_t n0 = 0; n0 < n; n0 += kTile) {
    const std::size_t len = std::min(kTile, n - n0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = a + i * k;
      const double* brow = b + i * n + n0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        double* o = out + p * n + n0;
        for (std::size_t j = 0; j < len; ++j) o[j] += av * brow[j];
      }
    }
  }
}

// out[M,K] += a[M,N] * b[K,N]^T, summing over N in ascending order.
void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* out,
                 std::vector<double>& scratch) {
  scratch.resize(n * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) scratch[j * k + p] = b[p * n + j];
  constexpr std::size_t kRows = 32;
  for (std::size_t j0 = 0; j0 < n; j0 += kRows) {
    const std::size_t jend = std::min(n, j0 + kRows);
    for (std::size_t i = 0; i < m; ++i) {
      double* o = out + i * k;
      for (std::size_t j = j0; j < jend; ++j) {
        const double av = a[i * n + j];
        const double* brow = scratch.data() + j * k;
        for (std::size_t p = 0; p < k; ++p) o[p] += av * brow[p];
      }
    }
  }
}

void require_rank4(const Tensor& t, const char* what) {
  if (t.rank() != 4) throw DimensionError(std::string(what) + ": expected rank-4 tensor, got " + shape_string(t.shape()));
}

void require_conv_weights(const LayerParams& p, const char* what) {
  if (p.weights.rank() != 4 || p.weights.dim(2) != p.weights.dim(3)) {
    throw DimensionError(std::string(what) + ": weights must be [A, B, K, K], got " + shape_string(p.weights.shape()));
  }
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (stride == 0) throw DimensionError("stride must be >= 1");
  if (kernel == 0 || kernel > in + 2 * pad) {
    throw DimensionError("kernel " + std::to_string(kernel) + " exceeds padded extent " + std::to_string(in + 2 * pad));
  }
  const std::size_t span = in + 2 * pad - kernel;
  if (span % stride != 0) {
    throw DimensionError("extent " + std::to_string(in) + " with kernel " + std::to_string(kernel) + ", pad " +
                         std::to_string(pad) + " is not an exact multiple of stride " + std::to_string(stride));
  }
  return span / stride + 1;
}

std::size_t conv_transpose_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (stride == 0) throw DimensionError("stride must be >= 1");
  const std::size_t full = (in - 1) * stride + kernel;
  if (in == 0 || full <= 2 * pad) throw DimensionError("transpose conv output would be empty");
  return full - 2 * pad;
}

Tensor conv2d_forward(const Tensor& input, const LayerParams& params, std::size_t stride, std::size_t pad) {
  require_rank4(input, "conv2d_forward");
  require_conv_weights(params, "conv2d_forward");
  const std::size_t batch = input.dim(0), cin = input.dim(1);
  const std::size_t cout = params.weights.dim(0), kernel = params.weights.dim(2);
  if (params.weights.dim(1) != cin) {
    throw DimensionError("conv2d_forward: input has " + std::to_string(cin) + " channels, kernel expects " +
                         std::to_string(params.weights.dim(1)));
  }
  const ConvGeometry g = make_geometry(cin, input.dim(2), input.dim(3), kernel, stride, pad);
  Tensor out({batch, cout, g.out_h, g.out_w});
  std::vector<double> cols(g.is_pointwise() ? 0 : g.rows() * g.cols());
  const std::size_t out_plane = cout * g.cols();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = input.data() + b * g.plane();
    const double* c = x;
    if (!g.is_pointwise()) {
      im2col(g, x, cols.data());
      c = cols.data();
    }
    double* o = out.data() + b * out_plane;
    if (!params.bias.empty()) {
      for (std::size_t oc = 0; oc < cout; ++oc) std::fill_n(o + oc * g.cols(), g.cols(), params.bias[oc]);
    }
    gemm_nn_acc(cout, g.cols(), g.rows(), params.weights.data(), c, o);
  }
  return out;
}

Tensor conv2d_backward(const Tensor& grad_out, const Tensor& saved_input, LayerParams& params, std::size_t stride,
                       std::size_t pad) {
  require_rank4(saved_input, "conv2d_backward");
  require_conv_weights(params, "conv2d_backward");
  const std::size_t batch = saved_input.dim(0), cin = saved_input.dim(1);
  const std::size_t cout = params.weights.dim(0), kernel = params.weights.dim(2);
  if (params.weights.dim(1) != cin) throw DimensionError("conv2d_backward: channel mismatch");
  const ConvGeometry g = make_geometry(cin, saved_input.dim(2), saved_input.dim(3), kernel, stride, pad);
  require_shape(grad_out, {batch, cout, g.out_h, g.out_w}, "conv2d_backward grad_out");

  Tensor grad_in = Tensor::zeros_like(saved_input);
  std::vector<double> cols(g.rows() * g.cols());
  std::vector<double> gcols(g.rows() * g.cols());
  std::vector<double> scratch;
  const std::size_t out_plane = cout * g.cols();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = saved_input.data() + b * g.plane();
    const double* go = grad_out.data() + b * out_plane;
    const double* c = x;
    if (!g.is_pointwise()) {
      im2col(g, x, cols.data());
      c = cols.data();
    }
    if (!params.bias.empty()) {
      for (std::size_t oc = 0; oc < cout; ++oc) {
        double s = 0.0;
        const double* row = go + oc * g.cols();
        for (std::size_t j = 0; j < g.cols(); ++j) s += row[j];
        params.grad_bias[oc] += s;
      }
    }
    gemm_nt_acc(cout, g.cols(), g.rows(), go, c, params.grad_weights.data(), scratch);
    double* gi = grad_in.data() + b * g.plane();
    if (g.is_pointwise()) {
      gemm_tn_acc(cout, g.cols(), g.rows(), params.weights.data(), go, gi);
    } else {
      std::fill(gcols.begin(), gcols.end(), 0.0);
      gemm_tn_acc(cout, g.cols(), g.rows(), params.weights.data(), go, gcols.data());
      col2im_add(g, gcols.data(), gi);
    }
  }
  return grad_in;
}

Tensor conv_transpose2d_forward(const Tensor& input, const LayerParams& params, std::size_t stride,
                                std::size_t pad) {
  require_rank4(input, "conv_transpose2d_forward");
  require_conv_weights(params, "conv_transpose2d_forward");
  const std::size_t batch = input.dim(0), cin = input.dim(1);
  if (params.weights.dim(0) != cin) {
    throw DimensionError("conv_transpose2d_forward: input has " + std::to_string(cin) + " channels, kernel expects " +
                         std::to_string(params.weights.dim(0)));
  }
  const std::size_t cout = params.weights.dim(1), kernel = params.weights.dim(2);
  const std::size_t oh = conv_transpose_out_extent(input.dim(2), kernel, stride, pad);
  const std::size_t ow = conv_transpose_out_extent(input.dim(3), kernel, stride, pad);
  const ConvGeometry g = make_geometry(cout, oh, ow, kernel, stride, pad);
  if (g.out_h != input.dim(2) || g.out_w != input.dim(3)) throw DimensionError("conv_transpose2d: geometry mismatch");

  Tensor out({batch, cout, oh, ow});
  std::vector<double> gcols(g.rows() * g.cols());
  const std::size_t in_plane = cin * g.cols();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = input.data() + b * in_plane;
    double* y = out.data() + b * g.plane();
    if (g.is_pointwise()) {
      gemm_tn_acc(cin, g.cols(), g.rows(), params.weights.data(), x, y);
    } else {
      std::fill(gcols.begin(), gcols.end(), 0.0);
      gemm_tn_acc(cin, g.cols(), g.rows(), params.weights.data(), x, gcols.data());
      col2im_add(g, gcols.data(), y);
    }
    if (!params.bias.empty()) {
      const std::size_t hw = oh * ow;
      for (std::size_t c = 0; c < cout; ++c) {
        double* p = y + c * hw;
        for (std::size_t j = 0; j < hw; ++j) p[j] += params.bias[c];
      }
    }
  }
  return out;
}

Tensor conv_transpose2d_backward(const Tensor& grad_out, const Tensor& saved_input, LayerParams& params,
                                 std::size_t stride, std::size_t pad) {
  require_rank4(saved_input, "conv_transpose2d_backward");
  require_conv_weights(params, "conv_transpose2d_backward");
  const std::size_t batch = saved_input.dim(0), cin = saved_input.dim(1);
  if (params.weights.dim(0) != cin) throw DimensionError("conv_transpose2d_backward: channel mismatch");
  const std::size_t cout = params.weights.dim(1), kernel = params.weights.dim(2);
  const std::size_t oh = conv_transpose_out_extent(saved_input.dim(2), kernel, stride, pad);
  const std::size_t ow = conv_transpose_out_extent(saved_input.dim(3), kernel, stride, pad);
  require_shape(grad_out, {batch, cout, oh, ow}, "conv_transpose2d_backward grad_out");
  const ConvGeometry g = make_geometry(cout, oh, ow, kernel, stride, pad);

  Tensor grad_in = Tensor::zeros_like(saved_input);
  std::vector<double> cols(g.is_pointwise() ? 0 : g.rows() * g.cols());
  std::vector<double> scratch;
  const std::size_t in_plane = cin * g.cols();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* gy = grad_out.data() + b * g.plane();
    const double* x = saved_input.data() + b * in_plane;
    const double* c = gy;
    if (!g.is_pointwise()) {
      im2col(g, gy, cols.data());
      c = cols.data();
    }
    gemm_nn_acc(cin, g.cols(), g.rows(), params.weights.data(), c, grad_in.data() + b * in_plane);
    gemm_nt_acc(cin, g.cols(), g.rows(), x, c, params.grad_weights.data(), scratch);
    if (!params.bias.empty()) {
      const std::size_t hw = oh * ow;
      for (std::size_t ch = 0; ch < cout; ++ch) {
        double s = 0.0;
        const double* p = gy + ch * hw;
        for (std::size_t j = 0; j < hw; ++j) s += p[j];
        params.grad_bias[ch] += s;
      }
    }
  }
  return grad_in;
}

// --------------------------------------------------------------------------

PoolResult maxpool2d_forward(const Tensor& input, std::size_t window, std::size_t stride) {
  require_rank4(input, "maxpool2d_forward");
  if (window == 0 || stride == 0) throw DimensionError("maxpool2d: window and stride must be >= 1");
  const std::size_t batch = input.dim(0), ch = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h % stride != 0 || w % stride != 0 || h < window || w < window || (h - window) % stride != 0 ||
      (w - window) % stride != 0) {
    throw DimensionError("maxpool2d: spatial extents " + shape_string({h, w}) + " not divisible for window " +
                         std::to_string(window) + ", stride " + std::to_string(stride));
  }
  const std::size_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  PoolResult r{Tensor({batch, ch, oh, ow}), PoolIndices{input.shape(), {}}};
  r.indices.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t base = (n * ch + c) * h * w;
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x, ++o) {
          std::size_t best = base + (y * stride) * w + x * stride;
          double best_v = input[best];
          for (std::size_t ky = 0; ky < window; ++ky) {
            for (std::size_t kx = 0; kx < window; ++kx) {
              const std::size_t idx = base + (y * stride + ky) * w + x * stride + kx;
              if (input[idx] > best_v) {
                best_v = input[idx];
                best = idx;
              }
            }
          }
          r.output[o] = best_v;
          r.indices.argmax[o] = best;
        }
      }
    }
  }
  return r;
}

Tensor maxpool2d_backward(const Tensor& grad_out, const PoolIndices& indices, const Tensor::Shape& input_shape) {
  if (indices.input_shape != input_shape) {
    throw DimensionError("maxpool2d_backward: indices were recorded for " + shape_string(indices.input_shape) +
                         ", not " + shape_string(input_shape));
  }
  if (grad_out.size() != indices.argmax.size()) {
    throw DimensionError("maxpool2d_backward: grad_out has " + std::to_string(grad_out.size()) +
                         " elements, indices " + std::to_string(indices.argmax.size()));
  }
  Tensor grad_in(input_shape);
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[indices.argmax[i]] += grad_out[i];
  return grad_in;
}

// --------------------------------------------------------------------------

BatchNormState::BatchNormState(std::size_t channels)
    : running_mean(Tensor({channels}, 0.0)), running_var(Tensor({channels}, 1.0)) {}

LayerParams make_batchnorm2d(std::string name, std::size_t channels) {
  return LayerParams(std::move(name), Tensor({channels}, 1.0), Tensor({channels}, 0.0));
}

Tensor batchnorm2d_forward(const Tensor& input, const LayerParams& params, BatchNormState& state, Mode mode,
                           BatchNormCache& cache) {
  require_rank4(input, "batchnorm2d_forward");
  const std::size_t batch = input.dim(0), ch = input.dim(1), hw = input.dim(2) * input.dim(3);
  require_shape(params.weights, {ch}, "batchnorm2d gamma");
  require_shape(params.bias, {ch}, "batchnorm2d beta");
  require_shape(state.running_mean, {ch}, "batchnorm2d running mean");
  if (mode == Mode::train && batch < 2) {
    throw ConfigError("batchnorm2d: train mode needs batch size >= 2, got " + std::to_string(batch));
  }
  cache.mode = mode;
  cache.normalized = Tensor::zeros_like(input);
  cache.inv_std.assign(ch, 0.0);
  Tensor out = Tensor::zeros_like(input);
  const double n = static_cast<double>(batch * hw);
  for (std::size_t c = 0; c < ch; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = input.data() + (b * ch + c) * hw;
        for (std::size_t j = 0; j < hw; ++j) s += p[j];
      }
      mean = s / n;
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = input.data() + (b * ch + c) * hw;
        for (std::size_t j = 0; j < hw; ++j) ss += (p[j] - mean) * (p[j] - mean);
      }
      var = ss / n;
      state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean;
      state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * (ss / (n - 1.0));
    } else {
      mean = state.running_mean[c];
      var = state.running_var[c];
    }
    const double inv = 1.0 / std::sqrt(var + state.eps);
    cache.inv_std[c] = inv;
    const double gamma = params.weights[c], beta = params.bias[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * hw;
      for (std::size_t j = 0; j < hw; ++j) {
        const double xh = (input[off + j] - mean) * inv;
        cache.normalized[off + j] = xh;
        out[off + j] = gamma * xh + beta;
      }
    }
  }
  return out;
}

Tensor batchnorm2d_backward(const Tensor& grad_out, const BatchNormCache& cache, LayerParams& params) {
  require_shape(grad_out, cache.normalized.shape(), "batchnorm2d_backward grad_out");
  const std::size_t batch = grad_out.dim(0), ch = grad_out.dim(1), hw = grad_out.dim(2) * grad_out.dim(3);
  const double n = static_cast<double>(batch * hw);
  Tensor grad_in = Tensor::zeros_like(grad_out);
  for (std::size_t c = 0; c < ch; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * hw;
      for (std::size_t j = 0; j < hw; ++j) {
        sum_dy += grad_out[off + j];
        sum_dy_xh += grad_out[off + j] * cache.normalized[off + j];
      }
    }
    params.grad_weights[c] += sum_dy_xh;
    params.grad_bias[c] += sum_dy;
    const double scale = params.weights[c] * cache.inv_std[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * hw;
      for (std::size_t j = 0; j < hw; ++j) {
        if (cache.mode == Mode::train) {
          grad_in[off + j] =
              scale / n * (n * grad_out[off + j] - sum_dy - cache.normalized[off + j] * sum_dy_xh);
        } else {
          grad_in[off + j] = scale * grad_out[off + j];
        }
      }
    }
  }
  return grad_in;
}

// --------------------------------------------------------------------------

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& saved_input) {
  require_shape(grad_out, saved_input.shape(), "relu_backward grad_out");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(saved_input[i] > 0.0)) g[i] = 0.0;
  return g;
}

Tensor linear_forward(const Tensor& input, const LayerParams& params) {
  if (input.rank() != 2 || params.weights.rank() != 2 || input.dim(1) != params.weights.dim(1)) {
    throw DimensionError("linear_forward: input " + shape_string(input.shape()) + " incompatible with weights " +
                         shape_string(params.weights.shape()));
  }
  const std::size_t batch = input.dim(0), in = input.dim(1), out_n = params.weights.dim(0);
  Tensor out({batch, out_n});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = input.data() + b * in;
    for (std::size_t o = 0; o < out_n; ++o) {
      const double* w = params.weights.data() + o * in;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t i = 0;
      for (; i + 4 <= in; i += 4) {
        s0 += w[i] * x[i];
        s1 += w[i + 1] * x[i + 1];
        s2 += w[i + 2] * x[i + 2];
        s3 += w[i + 3] * x[i + 3];
      }
      for (; i < in; ++i) s0 += w[i] * x[i];
      out[b * out_n + o] = (params.bias.empty() ? 0.0 : params.bias[o]) + ((s0 + s1) + (s2 + s3));
    }
  }
  return out;
}

Tensor linear_backward(const Tensor& grad_out, const Tensor& saved_input, LayerParams& params) {
  if (saved_input.rank() != 2 || saved_input.dim(1) != params.weights.dim(1)) {
    throw DimensionError("linear_backward: saved input " + shape_string(saved_input.shape()) +
                         " incompatible with weights " + shape_string(params.weights.shape()));
  }
  const std::size_t batch = saved_input.dim(0), in = saved_input.dim(1), out_n = params.weights.dim(0);
  require_shape(grad_out, {batch, out_n}, "linear_backward grad_out");
  Tensor grad_in({batch, in});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = saved_input.data() + b * in;
    double* gx = grad_in.data() + b * in;
    for (std::size_t o = 0; o < out_n; ++o) {
      const double g = grad_out[b * out_n + o];
      if (!params.bias.empty()) params.grad_bias[o] += g;
      double* gw = params.grad_weights.data() + o * in;
      const double* w = params.weights.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        gw[i] += g * x[i];
        gx[i] += g * w[i];
      }
    }
  }
  return grad_in;
}

Tensor flatten(const Tensor& input) {
  if (input.rank() < 1) throw DimensionError("flatten: empty tensor");
  return input.reshaped({input.dim(0), input.size() / input.dim(0)});
}

Tensor unflatten(const Tensor& input, const Tensor::Shape& sample_shape) {
  if (input.rank() != 2 || input.dim(1) != element_count(sample_shape)) {
    throw DimensionError("unflatten: " + shape_string(input.shape()) + " cannot become per-sample " +
                         shape_string(sample_shape));
  }
  Tensor::Shape s{input.dim(0)};
  s.insert(s.end(), sample_shape.begin(), sample_shape.end());
  return input.reshaped(std::move(s));
}

// --------------------------------------------------------------------------

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossResult bce_with_logits(const Tensor& logits, const Tensor& targets) {
  require_shape(targets, logits.shape(), "bce_with_logits targets");
  LossResult r{0.0, Tensor::zeros_like(logits)};
  const double n = static_cast<double>(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double t = targets[i];
    if (t != 0.0 && t != 1.0) throw ValidationError("bce_with_logits: target " + std::to_string(t) + " is not binary");
    const double z = logits[i];
    total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    r.grad[i] = (sigmoid(z) - t) / n;
  }
  r.loss = total / n;
  return r;
}

std::uint64_t fold_relu_pattern(std::uint64_t h, const Tensor& relu_input) noexcept {
  for (double v : relu_input.values()) h = (h ^ (v > 0.0 ? 1u : 0u)) * 0x100000001b3ULL;
  return h;
}

std::uint64_t fold_pool_pattern(std::uint64_t h, const PoolIndices& indices) noexcept {
  for (auto a : indices.argmax) h = (h ^ a) * 0x100000001b3ULL;
  return h;
}

}  // namespace vfis::numerics

// SPDX-License-Identifier: Apache-2.0

#include "vfis/segnet/gradsuite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "vfis/errors.hpp"
#include "vfis/numerics/gradcheck.hpp"
#include "vfis/segnet/model.hpp"

namespace vfis::segnet {

namespace n = numerics;
using n::Rng;

namespace {

struct Tally {
  double worst = 0.0;
  std::size_t count = 0;
  std::size_t redrawn = 0;
  void add(double e) {
    worst = std::max(worst, e);
    ++count;
  }
};

Tensor random_tensor(Tensor::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Uniform values whose magnitude stays clear of zero, so ReLU kinks are
/// never within the difference step.
Tensor away_from_zero(Tensor::Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 1.0);
  return t;
}

/// Distinct values on a coarse grid plus jitter: no two pool candidates are
/// within the difference step.
Tensor distinct_values(Tensor::Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  std::vector<double> grid(t.size());
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) * 0.01;
  for (std::size_t i = grid.size(); i > 1; --i) std::swap(grid[i - 1], grid[rng.below(i)]);
  for (std::size_t i = 0; i < grid.size(); ++i) t[i] = grid[i] + rng.uniform(0.0, 0.001);
  return t;
}

double project(const Tensor& out, const Tensor& r) { return n::dot(out, r); }

/// Compares `analytic` with the full finite-difference gradient of `loss`
/// with respect to `x` (perturbed in place).
void check_all(Tally& tally, const std::function<double()>& loss, Tensor& x, const Tensor& analytic) {
  const auto f = [&](const Tensor& probe) {
    const Tensor saved = x;
    x = probe;
    const double v = loss();
    x = saved;
    return v;
  };
  const Tensor numeric = n::finite_difference_grad(f, x);
  for (std::size_t i = 0; i < x.size(); ++i) tally.add(n::relative_error(analytic[i], numeric[i]));
}

// ------------------------------------------------------------- layer ops

void case_conv2d(Tally& t, Rng& rng, std::size_t size, std::size_t stride, std::size_t pad) {
  n::LayerParams p("conv", random_tensor({4, 3, 3, 3}, rng), random_tensor({4}, rng));
  Tensor x = random_tensor({2, 3, size, size}, rng);
  const Tensor out = n::conv2d_forward(x, p, stride, pad);
  const Tensor r = random_tensor(out.shape(), rng);
  p.zero_grad();
  const Tensor gx = n::conv2d_backward(r, x, p, stride, pad);
  const Tensor gw = p.grad_weights, gb = p.grad_bias;
  const auto loss = [&] { return project(n::conv2d_forward(x, p, stride, pad), r); };
  check_all(t, loss, x, gx);
  check_all(t, loss, p.weights, gw);
  check_all(t, loss, p.bias, gb);
}

void case_conv_transpose(Tally& t, Rng& rng) {
  n::LayerParams p("up", random_tensor({3, 2, 4, 4}, rng), random_tensor({2}, rng));
  Tensor x = random_tensor({2, 3, 3, 3}, rng);
  const Tensor out = n::conv_transpose2d_forward(x, p, 2, 1);
  const Tensor r = random_tensor(out.shape(), rng);
  p.zero_grad();
  const Tensor gx = n::conv_transpose2d_backward(r, x, p, 2, 1);
  const Tensor gw = p.grad_weights, gb = p.grad_bias;
  const auto loss = [&] { return project(n::conv_transpose2d_forward(x, p, 2, 1), r); };
  check_all(t, loss, x, gx);
  check_all(t, loss, p.weights, gw);
  check_all(t, loss, p.bias, gb);
}

void case_maxpool(Tally& t, Rng& rng) {
  Tensor x = distinct_values({2, 3, 6, 6}, rng);
  const auto res = n::maxpool2d_forward(x, 2, 2);
  const Tensor r = random_tensor(res.output.shape(), rng);
  const Tensor gx = n::maxpool2d_backward(r, res.indices, x.shape());
  check_all(t, [&] { return project(n::maxpool2d_forward(x, 2, 2).output, r); }, x, gx);
}

void case_batchnorm(Tally& t, Rng& rng, n::Mode mode) {
  n::LayerParams p("bn", random_tensor({4}, rng, 0.5, 1.5), random_tensor({4}, rng));
  n::BatchNormState state(4);
  for (auto& v : state.running_mean.values()) v = rng.uniform(-0.5, 0.5);
  for (auto& v : state.running_var.values()) v = rng.uniform(0.5, 2.0);
  const n::BatchNormState frozen = state;
  Tensor x = random_tensor({3, 4, 3, 3}, rng, -2.0, 2.0);
  n::BatchNormCache cache;
  const Tensor out = n::batchnorm2d_forward(x, p, state, mode, cache);
  const Tensor r = random_tensor(out.shape(), rng);
  p.zero_grad();
  const Tensor gx = n::batchnorm2d_backward(r, cache, p);
  const Tensor gw = p.grad_weights, gb = p.grad_bias;
  const auto loss = [&] {
    n::BatchNormState s = frozen;
    n::BatchNormCache c;
    return project(n::batchnorm2d_forward(x, p, s, mode, c), r);
  };
  check_all(t, loss, x, gx);
  check_all(t, loss, p.weights, gw);
  check_all(t, loss, p.bias, gb);
}

void case_relu(Tally& t, Rng& rng) {
  Tensor x = away_from_zero({2, 3, 4, 4}, rng);
  const Tensor r = random_tensor(x.shape(), rng);
  const Tensor gx = n::relu_backward(r, x);
  check_all(t, [&] { return project(n::relu_forward(x), r); }, x, gx);
}

void case_linear(Tally& t, Rng& rng) {
  n::LayerParams p("fc", random_tensor({5, 7}, rng), random_tensor({5}, rng));
  Tensor x = random_tensor({3, 7}, rng);
  const Tensor r = random_tensor({3, 5}, rng);
  p.zero_grad();
  const Tensor gx = n::linear_backward(r, x, p);
  const Tensor gw = p.grad_weights, gb = p.grad_bias;
  const auto loss = [&] { return project(n::linear_forward(x, p), r); };
  check_all(t, loss, x, gx);
  check_all(t, loss, p.weights, gw);
  check_all(t, loss, p.bias, gb);
}

void case_flatten(Tally& t, Rng& rng) {
  Tensor x = random_tensor({2, 3, 2, 2}, rng);
  const Tensor r = random_tensor({2, 12}, rng);
  const Tensor gx = n::unflatten(r, {3, 2, 2});
  check_all(t, [&] { return project(n::flatten(x), r); }, x, gx);
}

void case_bce(Tally& t, Rng& rng) {
  Tensor z = random_tensor({2, 1, 4, 4}, rng, -4.0, 4.0);
  Tensor y({2, 1, 4, 4});
  for (auto& v : y.values()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  const Tensor gz = n::bce_with_logits(z, y).grad;
  check_all(t, [&] { return n::bce_with_logits(z, y).loss; }, z, gz);
}

// ------------------------------------------------------------ full model

// ReLU and max-pool make the loss piecewise smooth. A central difference
// whose stencil straddles a branch change measures no derivative at all, so
// such probes are redrawn: a new direction, or the next-largest element.
constexpr int kMaxProbes = 16;

void case_model(Tally& t, Rng& rng, std::uint64_t seed) {
  const ModelConfig cfg = make_preset("tiny");
  SegmentationModel model(cfg, seed);
  const std::size_t b = 2, h = cfg.encoder.height, w = cfg.encoder.width;
  const Tensor images = random_tensor({b, 3, h, w}, rng, 0.0, 1.0);
  Tensor masks({b, 1, h, w});
  for (auto& v : masks.values()) v = rng.uniform() < 0.3 ? 1.0 : 0.0;

  const auto signature = [&] {
    return model.bottom().encoder().branch_signature() ^ (model.top().decoder().branch_signature() * 3);
  };
  for (auto* p : model.params()) p->zero_grad();
  const auto res = n::bce_with_logits(model.predict(images, n::Mode::train), masks);
  const std::uint64_t base = signature();
  model.bottom().backward(model.top().backward(res.grad));

  bool smooth = true;
  const auto loss = [&] {
    const double v = n::bce_with_logits(model.predict(images, n::Mode::train), masks).loss;
    smooth = smooth && signature() == base;
    return v;
  };

  for (auto* p : model.params()) {
    for (int which = 0; which < 2; ++which) {
      Tensor& value = which == 0 ? p->weights : p->bias;
      const Tensor& grad = which == 0 ? p->grad_weights : p->grad_bias;
      if (value.empty()) continue;
      const auto f = [&](const Tensor& probe) {
        const Tensor saved = value;
        value = probe;
        const double v = loss();
        value = saved;
        return v;
      };

      std::optional<double> dir_err;
      for (int attempt = 0; attempt < kMaxProbes && !dir_err; ++attempt) {
        Tensor dir(value.shape());
        for (auto& v : dir.values()) v = rng.normal();
        const double norm = std::sqrt(n::dot(dir, dir));
        for (auto& v : dir.values()) v /= norm;
        smooth = true;
        const double numeric = n::finite_difference_directional(f, value, dir);
        if (smooth) dir_err = n::relative_error(n::dot(grad, dir), numeric);
        else ++t.redrawn;
      }

      std::vector<std::size_t> order(grad.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](std::size_t x, std::size_t y) { return std::abs(grad[x]) > std::abs(grad[y]); });
      std::optional<double> elem_err;
      for (std::size_t k = 0; k < order.size() && k < static_cast<std::size_t>(kMaxProbes) && !elem_err; ++k) {
        const std::size_t idx[] = {order[k]};
        smooth = true;
        const Tensor fd = n::finite_difference_grad(f, value, idx);
        if (smooth) elem_err = n::relative_error(grad[order[k]], fd[order[k]]);
        else ++t.redrawn;
      }
      // A tensor for which every probe crossed a branch counts as a failure.
      t.add(dir_err.value_or(std::numeric_limits<double>::infinity()));
      t.add(elem_err.value_or(std::numeric_limits<double>::infinity()));
    }
  }
}

std::uint64_t fnv1a(const std::string& s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

using CaseFn = std::function<void(Tally&, Rng&, std::uint64_t)>;

const std::map<std::string, CaseFn>& cases() {
  static const std::map<std::string, CaseFn> table{
      {"conv2d", [](Tally& t, Rng& r, std::uint64_t) { case_conv2d(t, r, 6, 1, 1); }},
      {"conv2d_strided", [](Tally& t, Rng& r, std::uint64_t) { case_conv2d(t, r, 7, 2, 1); }},
      {"conv_transpose2d", [](Tally& t, Rng& r, std::uint64_t) { case_conv_transpose(t, r); }},
      {"maxpool2d", [](Tally& t, Rng& r, std::uint64_t) { case_maxpool(t, r); }},
      {"batchnorm2d_train", [](Tally& t, Rng& r, std::uint64_t) { case_batchnorm(t, r, n::Mode::train); }},
      {"batchnorm2d_eval", [](Tally& t, Rng& r, std::uint64_t) { case_batchnorm(t, r, n::Mode::eval); }},
      {"relu", [](Tally& t, Rng& r, std::uint64_t) { case_relu(t, r); }},
      {"linear", [](Tally& t, Rng& r, std::uint64_t) { case_linear(t, r); }},
      {"flatten", [](Tally& t, Rng& r, std::uint64_t) { case_flatten(t, r); }},
      {"bce_with_logits", [](Tally& t, Rng& r, std::uint64_t) { case_bce(t, r); }},
      {"model:tiny", [](Tally& t, Rng& r, std::uint64_t s) { case_model(t, r, s); }},
  };
  return table;
}

}  // namespace

std::vector<std::string> gradcheck_case_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : cases()) out.push_back(name);
  // Cheap ops first, the full model last.
  std::stable_partition(out.begin(), out.end(), [](const std::string& s) { return s.rfind("model:", 0) != 0; });
  return out;
}

GradCheckResult run_gradcheck_case(const std::string& name, std::uint64_t seed, double tolerance) {
  const auto it = cases().find(name);
  if (it == cases().end()) throw ConfigError("unknown gradcheck case '" + name + "'");
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(n::derive_seed(seed, fnv1a(name)));
  Tally tally;
  it->second(tally, rng, seed);
  GradCheckResult r;
  r.name = name;
  r.seed = seed;
  r.max_relative_error = tally.worst;
  r.comparisons = tally.count;
  r.redrawn = tally.redrawn;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.passed = tally.count > 0 && tally.worst <= tolerance;
  return r;
}

std::vector<GradCheckResult> run_gradcheck_suite(std::span<const std::uint64_t> seeds, double tolerance,
                                                 const GradCheckObserver& observer) {
  std::vector<GradCheckResult> out;
  for (const auto& name : gradcheck_case_names()) {
    for (auto seed : seeds) {
      out.push_back(run_gradcheck_case(name, seed, tolerance));
      if (observer) observer(out.back());
    }
  }
  return out;
}

}  // namespace vfis::segnet

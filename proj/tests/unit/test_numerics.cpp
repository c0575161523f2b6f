// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "vfis/errors.hpp"
#include "vfis/numerics/gradcheck.hpp"
#include "vfis/numerics/layers.hpp"
#include "vfis/numerics/optim.hpp"
#include "vfis/numerics/rng.hpp"

using namespace vfis;
using namespace vfis::numerics;

namespace {

Tensor random_tensor(Tensor::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Nested-loop cross-correlation.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t s, std::size_t p) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0), K = w.dim(2);
  const std::size_t Ho = (H + 2 * p - K) / s + 1, Wo = (W + 2 * p - K) / s + 1;
  Tensor y({B, O, Ho, Wo});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) {
          double acc = b.empty() ? 0.0 : b[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t ki = 0; ki < K; ++ki)
              for (std::size_t kj = 0; kj < K; ++kj) {
                const long yy = static_cast<long>(i * s + ki) - static_cast<long>(p);
                const long xx = static_cast<long>(j * s + kj) - static_cast<long>(p);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(H) || xx >= static_cast<long>(W)) continue;
                acc += x.at(n, c, yy, xx) * w.at(o, c, ki, kj);
              }
          y.at(n, o, i, j) = acc;
        }
  return y;
}

// Scatter definition of the transposed convolution; w is [Cin, Cout, K, K].
Tensor naive_conv_transpose(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t s, std::size_t p) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(1), K = w.dim(2);
  const std::size_t Ho = (H - 1) * s + K - 2 * p, Wo = (W - 1) * s + K - 2 * p;
  Tensor y({B, O, Ho, Wo});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) y.at(n, o, i, j) = b.empty() ? 0.0 : b[o];
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j)
          for (std::size_t o = 0; o < O; ++o)
            for (std::size_t ki = 0; ki < K; ++ki)
              for (std::size_t kj = 0; kj < K; ++kj) {
                const long yy = static_cast<long>(i * s + ki) - static_cast<long>(p);
                const long xx = static_cast<long>(j * s + kj) - static_cast<long>(p);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(Ho) || xx >= static_cast<long>(Wo)) continue;
                y.at(n, o, yy, xx) += x.at(n, c, i, j) * w.at(c, o, ki, kj);
              }
  return y;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Full central-difference gradient of x -> f() with x perturbed in place.
Tensor fd_in_place(Tensor& x, const std::function<double()>& f) {
  return finite_difference_grad(
      [&](const Tensor& probe) {
        const Tensor saved = x;
        x = probe;
        const double v = f();
        x = saved;
        return v;
      },
      x);
}

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("tensor shape bookkeeping") {
    Tensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    CHECK_THROWS_AS((void)element_count({2, 0, 3}), DimensionError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>(3)), DimensionError);
    CHECK_THROWS_AS(t.reshape({5, 5}), DimensionError);
    t[5] = 7.0;
    const Tensor r = t.reshaped({6, 4});
    CHECK(r[5] == 7.0);
    const Tensor s = t.slice_batch(0, 1);
    CHECK(s.shape() == Tensor::Shape{1, 3, 4});
    CHECK(s[5] == 7.0);
    CHECK(Tensor().empty());
    Tensor a({2}, {1.0, 2.0}), b({2}, {3.0, 4.0});
    const Tensor* items[] = {&a, &b};
    const Tensor st = stack(items);
    CHECK(st.shape() == Tensor::Shape{2, 2});
    CHECK(st[3] == 4.0);
    CHECK(dot(a, b) == 11.0);
    CHECK(bitwise_equal(a, a));
    Tensor nz({1}, {-0.0}), pz({1}, {0.0});
    CHECK_FALSE(bitwise_equal(nz, pz));
  }

  TEST_CASE("rng streams are deterministic and well-formed") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
      const auto x = a.next_u64();
      CHECK(x == b.next_u64());
      (void)c;
    }
    CHECK(Rng(1).next_u64() != Rng(2).next_u64());
    CHECK(derive_seed(5, 1) != derive_seed(5, 2));
    Rng r(9);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      CHECK(r.below(7) < 7);
      const double z = r.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
  }

  TEST_CASE("conv2d hand-evaluated example") {
    Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    LayerParams p("k", Tensor({1, 1, 2, 2}, 1.0), Tensor({1}, 0.0));
    const Tensor y = conv2d_forward(x, p, 1, 0);
    CHECK(y == Tensor({1, 1, 2, 2}, {12, 16, 24, 28}));
  }

  TEST_CASE("conv2d identity, bias-only and shape errors") {
    Rng rng(1);
    const Tensor x = random_tensor({2, 1, 5, 5}, rng);
    LayerParams id("id", Tensor({1, 1, 1, 1}, 1.0), Tensor({1}, 0.0));
    CHECK(conv2d_forward(x, id, 1, 0) == x);
    id.zero_grad();
    const Tensor g = random_tensor(x.shape(), rng);
    CHECK(conv2d_backward(g, x, id, 1, 0) == g);

    LayerParams p = make_conv2d("c", 1, 3, 3, rng);
    for (auto& v : p.bias.values()) v = 0.75;
    const Tensor y = conv2d_forward(Tensor({1, 1, 4, 4}), p, 1, 1);
    for (double v : y.values()) CHECK(v == 0.75);

    LayerParams wrong = make_conv2d("w", 2, 3, 3, rng);
    CHECK_THROWS_AS((void)conv2d_forward(x, wrong, 1, 1), DimensionError);
    CHECK_THROWS_AS((void)conv_out_extent(6, 3, 2, 0), DimensionError);
    CHECK(conv_out_extent(7, 3, 2, 1) == 4);
  }

  TEST_CASE("conv2d zero upstream gradient leaves parameter gradients unchanged") {
    Rng rng(2);
    LayerParams p = make_conv2d("c", 2, 3, 3, rng);
    const Tensor x = random_tensor({2, 2, 4, 4}, rng);
    p.zero_grad();
    const Tensor gx = conv2d_backward(Tensor({2, 3, 4, 4}), x, p, 1, 1);
    for (double v : gx.values()) CHECK(v == 0.0);
    for (double v : p.grad_weights.values()) CHECK(v == 0.0);
    for (double v : p.grad_bias.values()) CHECK(v == 0.0);
  }

  TEST_CASE("conv2d and conv_transpose2d match nested-loop oracles") {
    Rng rng(3);
    struct Geo {
      std::size_t size, k, s, p;
    };
    for (const Geo g : {Geo{6, 3, 1, 1}, Geo{7, 3, 2, 1}, Geo{8, 2, 2, 0}, Geo{5, 1, 1, 0}}) {
      LayerParams conv("c", random_tensor({4, 3, g.k, g.k}, rng), random_tensor({4}, rng));
      const Tensor x = random_tensor({2, 3, g.size, g.size}, rng);
      CHECK(max_abs_diff(conv2d_forward(x, conv, g.s, g.p), naive_conv(x, conv.weights, conv.bias, g.s, g.p)) < 1e-12);
    }
    for (const Geo g : {Geo{3, 4, 2, 1}, Geo{4, 3, 1, 1}, Geo{2, 2, 2, 0}}) {
      LayerParams up("u", random_tensor({3, 2, g.k, g.k}, rng), random_tensor({2}, rng));
      const Tensor x = random_tensor({2, 3, g.size, g.size}, rng);
      CHECK(max_abs_diff(conv_transpose2d_forward(x, up, g.s, g.p),
                         naive_conv_transpose(x, up.weights, up.bias, g.s, g.p)) < 1e-12);
    }
  }

  TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
      const Tensor w = random_tensor({3, 2, 4, 4}, rng);  // conv: 2 -> 3 channels
      LayerParams conv("c", w, Tensor());
      LayerParams up("u", w, Tensor());                   // transpose: 3 -> 2 channels
      const Tensor x = random_tensor({2, 2, 8, 8}, rng);
      const Tensor cx = conv2d_forward(x, conv, 2, 1);
      const Tensor y = random_tensor(cx.shape(), rng);
      const Tensor ty = conv_transpose2d_forward(y, up, 2, 1);
      const double lhs = dot(cx, y), rhs = dot(x, ty);
      CHECK(std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300) <= 1e-10);
    }
  }

  TEST_CASE("conv gradients agree with central differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(100 + seed);
      LayerParams p("c", random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng));
      Tensor x = random_tensor({2, 2, 4, 4}, rng);
      const Tensor r = random_tensor({2, 3, 4, 4}, rng);
      p.zero_grad();
      const Tensor gx = conv2d_backward(r, x, p, 1, 1);
      const auto f = [&] { return dot(conv2d_forward(x, p, 1, 1), r); };
      CHECK(max_relative_error(gx, fd_in_place(x, f)) <= 1e-5);
      const Tensor gw = p.grad_weights, gb = p.grad_bias;
      CHECK(max_relative_error(gw, fd_in_place(p.weights, f)) <= 1e-5);
      CHECK(max_relative_error(gb, fd_in_place(p.bias, f)) <= 1e-5);

      LayerParams u("u", random_tensor({3, 2, 4, 4}, rng), random_tensor({2}, rng));
      Tensor xu = random_tensor({2, 3, 3, 3}, rng);
      const Tensor ru = random_tensor({2, 2, 6, 6}, rng);
      u.zero_grad();
      const Tensor gxu = conv_transpose2d_backward(ru, xu, u, 2, 1);
      const auto fu = [&] { return dot(conv_transpose2d_forward(xu, u, 2, 1), ru); };
      CHECK(max_relative_error(gxu, fd_in_place(xu, fu)) <= 1e-5);
      const Tensor guw = u.grad_weights;
      CHECK(max_relative_error(guw, fd_in_place(u.weights, fu)) <= 1e-5);
    }
  }

  TEST_CASE("maxpool examples, ties and oracle") {
    const auto r = maxpool2d_forward(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), 2, 2);
    CHECK(r.output == Tensor({1, 1, 1, 1}, {4}));
    CHECK(r.indices.argmax == std::vector<std::size_t>{3});
    const Tensor g = maxpool2d_backward(Tensor({1, 1, 1, 1}, {1.0}), r.indices, {1, 1, 2, 2});
    CHECK(g == Tensor({1, 1, 2, 2}, {0, 0, 0, 1}));

    const auto c = maxpool2d_forward(Tensor({1, 1, 4, 4}, 2.5), 2, 2);
    CHECK(c.indices.argmax == std::vector<std::size_t>{0, 2, 8, 10});
    for (double v : c.output.values()) CHECK(v == 2.5);

    Rng rng(5);
    const Tensor x = random_tensor({1, 2, 8, 8}, rng);
    const auto p = maxpool2d_forward(x, 2, 2);
    for (std::size_t ch = 0; ch < 2; ++ch)
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
          double m = -std::numeric_limits<double>::infinity();
          for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) m = std::max(m, x.at(0, ch, 2 * i + a, 2 * j + b));
          CHECK(p.output.at(0, ch, i, j) == m);
        }
    const Tensor go = random_tensor(p.output.shape(), rng);
    const Tensor gi = maxpool2d_backward(go, p.indices, x.shape());
    CHECK(sum(gi) == sum(go));
    CHECK_THROWS_AS((void)maxpool2d_forward(Tensor({1, 1, 5, 5}), 2, 2), DimensionError);
  }

  TEST_CASE("maxpool gradient agrees with central differences on unique maxima") {
    Rng rng(6);
    Tensor x({2, 2, 4, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>((i * 37) % x.size()) * 0.01;
    const auto p = maxpool2d_forward(x, 2, 2);
    const Tensor r = random_tensor(p.output.shape(), rng);
    const Tensor g = maxpool2d_backward(r, p.indices, x.shape());
    CHECK(max_relative_error(g, fd_in_place(x, [&] { return dot(maxpool2d_forward(x, 2, 2).output, r); })) <= 1e-5);
  }

  TEST_CASE("batchnorm normalises per channel") {
    Rng rng(7);
    // Per-channel mean 5 and variance 4, exactly: values 5 +- 2.
    Tensor x({4, 2, 2, 2});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 5.0 + ((i / 2) % 2 == 0 ? 2.0 : -2.0);
    LayerParams p = make_batchnorm2d("bn", 2);
    const auto moments = [](const Tensor& y, std::size_t ch) {
      double m = 0, v = 0;
      std::size_t n = 0;
      for (std::size_t b = 0; b < y.dim(0); ++b)
        for (std::size_t i = 0; i < 4; ++i) m += y[(b * 2 + ch) * 4 + i], ++n;
      m /= static_cast<double>(n);
      for (std::size_t b = 0; b < y.dim(0); ++b)
        for (std::size_t i = 0; i < 4; ++i) v += std::pow(y[(b * 2 + ch) * 4 + i] - m, 2);
      return std::pair{m, v / static_cast<double>(n)};
    };
    {
      BatchNormState st(2);
      st.eps = 0.0;
      BatchNormCache cache;
      const Tensor y = batchnorm2d_forward(x, p, st, Mode::train, cache);
      for (std::size_t ch = 0; ch < 2; ++ch) {
        const auto [m, v] = moments(y, ch);
        CHECK(std::abs(m) <= 1e-9);
        CHECK(std::abs(v - 1.0) <= 1e-9);
      }
    }
    {
      BatchNormState st(2);  // default eps: variance shrinks to var / (var + eps)
      BatchNormCache cache;
      const Tensor y = batchnorm2d_forward(x, p, st, Mode::train, cache);
      const auto [m, v] = moments(y, 0);
      CHECK(std::abs(m) <= 1e-9);
      CHECK(std::abs(v - 4.0 / (4.0 + 1e-5)) <= 1e-12);
      // Running estimates: momentum 0.1 towards the batch mean and the unbiased variance.
      CHECK(st.running_mean[0] == doctest::Approx(0.9 * 0.0 + 0.1 * 5.0).epsilon(1e-15));
      CHECK(st.running_var[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 4.0 * 16.0 / 15.0).epsilon(1e-14));
    }
    {
      LayerParams q = make_batchnorm2d("bn", 2);
      q.weights = Tensor({2}, {-3.0, 0.5});
      q.bias = Tensor({2}, {1.5, -2.0});
      BatchNormState st(2);
      st.eps = 0.0;
      BatchNormCache cache;
      const Tensor y = batchnorm2d_forward(x, q, st, Mode::train, cache);
      const auto [m0, v0] = moments(y, 0);
      const auto [m1, v1] = moments(y, 1);
      CHECK(m0 == doctest::Approx(1.5).epsilon(1e-12));
      CHECK(std::sqrt(v0) == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(m1 == doctest::Approx(-2.0).epsilon(1e-12));
      CHECK(std::sqrt(v1) == doctest::Approx(0.5).epsilon(1e-12));
    }
    BatchNormState st(2);
    BatchNormCache cache;
    CHECK_THROWS_AS((void)batchnorm2d_forward(Tensor({1, 2, 2, 2}), p, st, Mode::train, cache), ConfigError);
    CHECK_NOTHROW((void)batchnorm2d_forward(Tensor({1, 2, 2, 2}), p, st, Mode::eval, cache));
  }

  TEST_CASE("batchnorm gradients agree with central differences") {
    for (const Mode mode : {Mode::train, Mode::eval}) {
      Rng rng(8);
      LayerParams p("bn", random_tensor({3}, rng, 0.5, 1.5), random_tensor({3}, rng));
      BatchNormState frozen(3);
      for (auto& v : frozen.running_var.values()) v = rng.uniform(0.5, 2.0);
      Tensor x = random_tensor({3, 3, 2, 2}, rng, -2, 2);
      const Tensor r = random_tensor(x.shape(), rng);
      BatchNormState st = frozen;
      BatchNormCache cache;
      (void)batchnorm2d_forward(x, p, st, mode, cache);
      p.zero_grad();
      const Tensor gx = batchnorm2d_backward(r, cache, p);
      const auto f = [&] {
        BatchNormState s = frozen;
        BatchNormCache c;
        return dot(batchnorm2d_forward(x, p, s, mode, c), r);
      };
      CHECK(max_relative_error(gx, fd_in_place(x, f)) <= 1e-5);
      const Tensor gg = p.grad_weights, gb = p.grad_bias;
      CHECK(max_relative_error(gg, fd_in_place(p.weights, f)) <= 1e-5);
      CHECK(max_relative_error(gb, fd_in_place(p.bias, f)) <= 1e-5);
    }
  }

  TEST_CASE("relu, linear, flatten") {
    const Tensor x({1, 4}, {-1.0, 0.0, 2.0, -0.5});
    CHECK(relu_forward(x) == Tensor({1, 4}, {0.0, 0.0, 2.0, 0.0}));
    CHECK(relu_backward(Tensor({1, 4}, 1.0), x) == Tensor({1, 4}, {0.0, 0.0, 1.0, 0.0}));

    Rng rng(9);
    Tensor eye({4, 4});
    for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
    const Tensor in = random_tensor({3, 4}, rng);
    CHECK(linear_forward(in, LayerParams("id", eye, Tensor({4}))) == in);

    LayerParams fc("fc", random_tensor({2, 4}, rng), random_tensor({2}, rng));
    Tensor xi = random_tensor({3, 4}, rng);
    const Tensor r = random_tensor({3, 2}, rng);
    fc.zero_grad();
    const Tensor gx = linear_backward(r, xi, fc);
    const auto f = [&] { return dot(linear_forward(xi, fc), r); };
    CHECK(max_relative_error(gx, fd_in_place(xi, f)) <= 1e-5);
    const Tensor gw = fc.grad_weights;
    CHECK(max_relative_error(gw, fd_in_place(fc.weights, f)) <= 1e-5);

    const Tensor img = random_tensor({2, 3, 4, 5}, rng);
    CHECK(unflatten(flatten(img), {3, 4, 5}) == img);
    CHECK(flatten(img).shape() == Tensor::Shape{2, 60});
    CHECK_THROWS_AS((void)unflatten(flatten(img), {3, 4, 4}), DimensionError);
  }

  TEST_CASE("bce with logits") {
    const auto a = bce_with_logits(Tensor({1, 1, 1, 1}, {0.0}), Tensor({1, 1, 1, 1}, {1.0}));
    CHECK(a.loss == doctest::Approx(0.6931471805599453).epsilon(1e-15));
    const auto b = bce_with_logits(Tensor({1, 1, 1, 1}, {40.0}), Tensor({1, 1, 1, 1}, {1.0}));
    CHECK(b.loss <= 1e-15);
    CHECK(std::abs(b.grad[0]) <= 1e-15);
    const auto c = bce_with_logits(Tensor({1, 1, 1, 2}, {-1000.0, 1000.0}), Tensor({1, 1, 1, 2}, {1.0, 0.0}));
    CHECK(c.loss == doctest::Approx(1000.0));
    CHECK(std::isfinite(c.grad[0]));
    CHECK_THROWS_AS((void)bce_with_logits(Tensor({1, 1, 1, 1}, {0.0}), Tensor({1, 1, 1, 1}, {0.5})), ValidationError);

    Rng rng(10);
    Tensor z = random_tensor({2, 1, 3, 3}, rng, -5, 5);
    Tensor t({2, 1, 3, 3});
    for (auto& v : t.values()) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const Tensor g = bce_with_logits(z, t).grad;
    const Tensor fd = fd_in_place(z, [&] { return bce_with_logits(z, t).loss; });
    CHECK(max_abs_diff(g, fd) <= 1e-6);
    // Oracle: mean of -t log(sigmoid z) - (1-t) log(1 - sigmoid z).
    double ref = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-z[i]));
      ref += -(t[i] * std::log(s) + (1 - t[i]) * std::log(1 - s));
    }
    CHECK(bce_with_logits(z, t).loss == doctest::Approx(ref / static_cast<double>(z.size())).epsilon(1e-12));
  }

  TEST_CASE("sgd and adam updates") {
    LayerParams p("w", Tensor({1}, {1.0}), Tensor());
    OptimizerSettings sgd;
    sgd.momentum = 0.0;
    sgd.lr = 0.1;
    Optimizer o(sgd, {&p});
    p.grad_weights[0] = 2.0;
    o.step();
    CHECK(p.weights[0] == doctest::Approx(0.8).epsilon(1e-15));

    LayerParams q("w", Tensor({2}, {1.0, -2.0}), Tensor({1}, {0.5}));
    OptimizerSettings adam;
    adam.kind = OptimizerSettings::Kind::adam;
    Optimizer oa(adam, {&q});
    oa.zero_grad();
    oa.step();
    CHECK(q.weights == Tensor({2}, {1.0, -2.0}));
    CHECK(q.bias == Tensor({1}, {0.5}));

    // Adam with bias correction, reference computed by hand.
    LayerParams r("w", Tensor({1}, {1.0}), Tensor());
    Optimizer orr(adam, {&r});
    double m = 0, v = 0, w = 1.0;
    for (int t = 1; t <= 3; ++t) {
      const double g = 0.5 * t;
      r.grad_weights[0] = g;
      orr.step();
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
      w -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(r.weights[0] == doctest::Approx(w).epsilon(1e-14));
    }

    // Momentum SGD: v <- m v + g; w <- w - lr v.
    LayerParams s("w", Tensor({1}, {0.0}), Tensor());
    Optimizer os(OptimizerSettings{}, {&s});
    s.grad_weights[0] = 1.0;
    os.step();
    os.step();
    CHECK(s.weights[0] == doctest::Approx(-(0.01 * 1.0 + 0.01 * 1.9)).epsilon(1e-15));
    CHECK(os.state().size() == 1);
  }

  TEST_CASE("zero_grad clears exactly") {
    Rng rng(11);
    LayerParams p = make_conv2d("c", 2, 2, 3, rng);
    for (auto& v : p.grad_weights.values()) v = 3.0;
    p.zero_grad();
    for (double v : p.grad_weights.values()) CHECK(v == 0.0);
    for (double v : p.grad_bias.values()) CHECK(v == 0.0);
  }

  TEST_CASE("finite differences") {
    const Tensor x({1}, {3.0});
    const Tensor g = finite_difference_grad([](const Tensor& t) { return t[0] * t[0]; }, x);
    CHECK(std::abs(g[0] - 6.0) <= 1e-6);
    const Tensor y({3}, {1.0, -2.0, 0.5});
    const Tensor lin = finite_difference_grad([](const Tensor& t) { return 2 * t[0] - 3 * t[1] + 0.25 * t[2]; }, y);
    CHECK(lin[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(lin[1] == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(lin[2] == doctest::Approx(0.25).epsilon(1e-8));
    const double dd =
        finite_difference_directional([](const Tensor& t) { return t[0] * t[1]; }, Tensor({2}, {2.0, 3.0}),
                                      Tensor({2}, {1.0, 0.0}));
    CHECK(dd == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(relative_error(1.0, 1.0) == 0.0);
    CHECK(relative_error(0.0, 1e-9) == doctest::Approx(1e-6));
  }

  TEST_CASE("identical seeds give bitwise-identical updates") {
    const auto run = [] {
      Rng rng(12);
      LayerParams p = make_conv2d("c", 2, 3, 3, rng);
      Optimizer o(OptimizerSettings{}, {&p});
      const Tensor x = random_tensor({2, 2, 4, 4}, rng);
      for (int i = 0; i < 3; ++i) {
        o.zero_grad();
        const Tensor y = conv2d_forward(x, p, 1, 1);
        (void)conv2d_backward(y, x, p, 1, 1);
        o.step();
      }
      return p.weights;
    };
    CHECK(bitwise_equal(run(), run()));
  }
}

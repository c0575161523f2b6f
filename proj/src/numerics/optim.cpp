// SPDX-License-Identifier: Apache-2.0

#include "vfis/numerics/optim.hpp"

#include <cmath>

#include "vfis/errors.hpp"

namespace vfis::numerics {

std::string to_string(OptimizerSettings::Kind kind) { return kind == OptimizerSettings::Kind::sgd ? "sgd" : "adam"; }

OptimizerSettings::Kind parse_optimizer_kind(const std::string& s) {
  if (s == "sgd") return OptimizerSettings::Kind::sgd;
  if (s == "adam") return OptimizerSettings::Kind::adam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

Optimizer::Optimizer(OptimizerSettings settings, std::vector<LayerParams*> params)
    : settings_(settings), params_(std::move(params)) {
  const bool adam = settings_.kind == OptimizerSettings::Kind::adam;
  for (LayerParams* p : params_) {
    slots_.push_back({&p->weights, &p->grad_weights, p->name + "/w", Tensor::zeros_like(p->weights),
                      adam ? Tensor::zeros_like(p->weights) : Tensor{}});
    if (!p->bias.empty()) {
      slots_.push_back({&p->bias, &p->grad_bias, p->name + "/b", Tensor::zeros_like(p->bias),
                        adam ? Tensor::zeros_like(p->bias) : Tensor{}});
    }
  }
}

void Optimizer::step() {
  ++steps_;
  const double lr = settings_.lr;
  if (settings_.kind == OptimizerSettings::Kind::sgd) {
    const double m = settings_.momentum;
    for (Slot& s : slots_) {
      double* w = s.value->data();
      double* v = s.first.data();
      const double* g = s.grad->data();
      for (std::size_t i = 0; i < s.value->size(); ++i) {
        v[i] = m * v[i] + g[i];
        w[i] -= lr * v[i];
      }
    }
    return;
  }
  const double b1 = settings_.beta1, b2 = settings_.beta2;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
  for (Slot& s : slots_) {
    double* w = s.value->data();
    double* m1 = s.first.data();
    double* m2 = s.second.data();
    const double* g = s.grad->data();
    for (std::size_t i = 0; i < s.value->size(); ++i) {
      m1[i] = b1 * m1[i] + (1.0 - b1) * g[i];
      m2[i] = b2 * m2[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m1[i] / c1, vhat = m2[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + settings_.eps);
    }
  }
}

void Optimizer::zero_grad() noexcept {
  for (LayerParams* p : params_) p->zero_grad();
}

std::vector<NamedTensor> Optimizer::state() {
  std::vector<NamedTensor> out;
  const bool adam = settings_.kind == OptimizerSettings::Kind::adam;
  for (Slot& s : slots_) {
    out.push_back({"opt/" + s.name + (adam ? "/m" : "/v"), &s.first});
    if (adam) out.push_back({"opt/" + s.name + "/s", &s.second});
  }
  return out;
}

}  // namespace vfis::numerics

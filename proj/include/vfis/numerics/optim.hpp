// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vfis/numerics/layers.hpp"

namespace vfis::numerics {

struct OptimizerSettings {
  enum class Kind { sgd, adam };
  Kind kind = Kind::sgd;
  double lr = 1e-2;
  double momentum = 0.9;  // sgd
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double eps = 1e-8;
};

[[nodiscard]] std::string to_string(OptimizerSettings::Kind kind);
[[nodiscard]] OptimizerSettings::Kind parse_optimizer_kind(const std::string& s);

/// Applies updates to a fixed list of parameter tensors. Slot layout is
/// derived from the parameter order, so two optimizers built over equal
/// parameter lists evolve identically.
class Optimizer {
 public:
  Optimizer(OptimizerSettings settings, std::vector<LayerParams*> params);

  void step();
  void zero_grad() noexcept;

  [[nodiscard]] const OptimizerSettings& settings() const noexcept { return settings_; }
  [[nodiscard]] std::uint64_t steps_taken() const noexcept { return steps_; }
  void set_steps_taken(std::uint64_t t) noexcept { steps_ = t; }

  [[nodiscard]] std::vector<NamedTensor> state();

 private:
  struct Slot {
    Tensor* value;
    const Tensor* grad;
    std::string name;
    Tensor first;   // sgd velocity / adam m
    Tensor second;  // adam v (unused by sgd)
  };

  OptimizerSettings settings_;
  std::vector<LayerParams*> params_;
  std::vector<Slot> slots_;
  std::uint64_t steps_ = 0;
};

}  // namespace vfis::numerics

// SPDX-License-Identifier: Apache-2.0
//
// Run configuration. The file format is one `key = value` per line; `#`
// starts a comment. Keys (defaults in brackets):
//
//   role            both | bottom | top                    [both]
//   preset          tiny | vgg16                           [tiny]
//   features        boundary feature count                 [500]
//   batchnorm       true | false                           [preset default]
//   data            dataset root with images/ and labels/  [empty: synthetic]
//   data.n          synthetic sample count                 [369]
//   data.size       synthetic generation size              [128]
//   data.seed       synthetic generator seed               [1]
//   road_color      r,g,b                                  [128,64,128]
//   batch_size                                             [8]
//   epochs                                                 [100]
//   optimizer       sgd | adam                             [sgd]
//   lr / momentum / beta1 / beta2 / adam_eps               [1e-2 / 0.9 / 0.9 / 0.999 / 1e-8]
//   seed            model init and batch-order seed        [0]
//   transport       loopback | tcp                         [loopback]
//   host / port     tcp endpoint                           [127.0.0.1 / 7437]
//   port_file       bottom writes its bound port here      [empty]
//   connect_timeout seconds the top keeps retrying         [30]
//   key_file        hex key file; else $VFIS_KEY           [empty]
//   float_width     8 | 4 bytes per wire element           [8]
//   report_metrics  top sends per-epoch METRICS_REPORT     [false]
//   out             output directory                       [out]
//   metrics         metrics log path                       [<out>/metrics.jsonl]
//   resume          continue from the checkpoints in out   [false]
//   stop_after      end the run after this many epochs     [0: never]
//   init_weights    bottom weights to import (checkpoint   [empty]
//                   format, shape-checked by name)

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vfis/datasets/dataset.hpp"
#include "vfis/numerics/optim.hpp"

namespace vfis::orchestrator {

enum class Role { both, bottom, top };
enum class TransportKind { loopback, tcp };

[[nodiscard]] std::string to_string(Role r);
[[nodiscard]] std::string to_string(TransportKind t);

struct PartyConfig {
  Role role = Role::both;
  std::string preset = "tiny";
  std::size_t features = 500;
  std::optional<bool> batchnorm;

  std::filesystem::path data;
  std::size_t data_n = 369;
  std::size_t data_size = 128;
  std::uint64_t data_seed = 1;
  datasets::RoadColor road_color;

  std::uint32_t batch_size = 8;
  std::uint32_t epochs = 100;
  numerics::OptimizerSettings optimizer;
  std::uint64_t seed = 0;

  TransportKind transport = TransportKind::loopback;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7437;
  std::filesystem::path port_file;
  double connect_timeout = 30.0;
  std::filesystem::path key_file;
  std::uint8_t float_width = 8;
  bool report_metrics = false;

  std::filesystem::path out = "out";
  std::filesystem::path metrics;
  bool resume = false;
  std::uint32_t stop_after = 0;
  std::filesystem::path init_weights;

  [[nodiscard]] std::filesystem::path metrics_path() const { return metrics.empty() ? out / "metrics.jsonl" : metrics; }
  [[nodiscard]] std::filesystem::path bottom_checkpoint() const { return out / "bottom.ckpt"; }
  [[nodiscard]] std::filesystem::path top_checkpoint() const { return out / "top.ckpt"; }
  void validate() const;
};

/// Sets one key. Throws ConfigError naming the key on unknown keys or
/// unparsable values.
void apply_setting(PartyConfig& cfg, const std::string& key, const std::string& value);

/// "key=value" form used by --set.
void apply_assignment(PartyConfig& cfg, const std::string& assignment);

/// Applies every line of `path` to cfg. Errors carry "<file>:<line>".
void load_config_file(PartyConfig& cfg, const std::filesystem::path& path);
void parse_config_text(PartyConfig& cfg, const std::string& text, const std::string& source = "<config>");

/// Fully resolved key = value lines, loadable by load_config_file.
[[nodiscard]] std::string describe(const PartyConfig& cfg);

}  // namespace vfis::orchestrator

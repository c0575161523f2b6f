// SPDX-License-Identifier: Apache-2.0
//
// vfis: command-line front end.
//
//   vfis gen-data  --n 369 --size 128 --out data/
//   vfis train     --role both --config run.cfg [--set key=value ...]
//   vfis eval      --checkpoint out/ [--data data/]
//   vfis infer     --checkpoint out/ --images data/images --out pred/
//   vfis bench     --features 100,500,1000
//   vfis gradcheck [--seeds 0,1,2,3,4]
//
// Exit codes: 0 ok, 2 config, 3 protocol/transport, 4 data, 5 numeric, 1 other.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <list>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vfis/datasets/synthetic.hpp"
#include "vfis/errors.hpp"
#include "vfis/metrics/metrics.hpp"
#include "vfis/orchestrator/bench.hpp"
#include "vfis/orchestrator/checkpoint.hpp"
#include "vfis/orchestrator/training.hpp"
#include "vfis/segnet/gradsuite.hpp"

namespace fs = std::filesystem;
namespace ds = vfis::datasets;
namespace orch = vfis::orchestrator;
using vfis::numerics::Tensor;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kProtocol = 3, kData = 4, kNumeric = 5 };

/// Optional overrides collected from flags, applied as config assignments.
struct Overrides {
  std::list<std::pair<std::string, std::string>> flags;  // stable addresses for CLI11
  std::vector<std::string> sets;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto& slot = flags.emplace_back(key, "");
    app->add_option(flag, slot.second, help);
  }
  void apply(orch::PartyConfig& cfg) const {
    for (const auto& [key, value] : flags)
      if (!value.empty()) orch::apply_setting(cfg, key, value);
    for (const auto& s : sets) orch::apply_assignment(cfg, s);
  }
};

void add_common_overrides(Overrides& o, CLI::App* app) {
  o.add(app, "--preset", "preset", "Model preset: tiny | vgg16");
  o.add(app, "--data", "data", "Dataset root with images/ and labels/ (default: synthetic)");
  o.add(app, "--epochs", "epochs", "Training epochs");
  o.add(app, "--batch-size", "batch_size", "Samples per step");
  o.add(app, "--seed", "seed", "Initialisation and batch-order seed");
  o.add(app, "--optimizer", "optimizer", "sgd | adam");
  o.add(app, "--lr", "lr", "Learning rate");
  o.add(app, "--out", "out", "Output directory");
  app->add_option("--set", o.sets, "Any config key as key=value (repeatable)");
}

orch::PartyConfig resolve(const std::string& config_path, const Overrides& o) {
  orch::PartyConfig cfg;
  if (!config_path.empty()) orch::load_config_file(cfg, config_path);
  o.apply(cfg);
  return cfg;
}

void echo_config(const orch::PartyConfig& cfg) {
  std::cout << "# resolved configuration\n" << orch::describe(cfg) << std::flush;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    try {
      if (dash != std::string::npos) {
        const auto lo = std::stoull(item.substr(0, dash)), hi = std::stoull(item.substr(dash + 1));
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
      } else {
        out.push_back(std::stoull(item));
      }
    } catch (const std::exception&) {
      throw vfis::ConfigError("cannot parse '" + item + "' as a seed or seed range");
    }
  }
  if (out.empty()) throw vfis::ConfigError("empty seed list");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (auto v : parse_seed_list(s)) out.push_back(static_cast<std::size_t>(v));
  return out;
}

// ------------------------------------------------------------- gen-data

int cmd_gen_data(std::size_t n, std::size_t size, std::uint64_t seed, const fs::path& out) {
  const auto pairs = ds::gen_synthetic(n, size, seed);
  ds::write_dataset(out, pairs);
  double lo = 1, hi = 0;
  for (const auto& p : pairs) {
    lo = std::min(lo, ds::road_fraction(p.mask));
    hi = std::max(hi, ds::road_fraction(p.mask));
  }
  std::printf("wrote %zu image/mask pairs (%zux%zu) to %s; road fraction %.3f..%.3f\n", pairs.size(), size, size,
              out.string().c_str(), lo, hi);
  return kOk;
}

// --------------------------------------------------------------- train

int cmd_train(const orch::PartyConfig& cfg) {
  echo_config(cfg);
  const auto report = orch::run_training(cfg);
  std::printf("completed %u epoch(s)", report.epochs_completed);
  if (!report.history.empty()) {
    const auto& last = report.history.back();
    std::printf(", %zu step(s); last batch loss %.6f acc %.4f iou %.4f", report.steps, last.loss,
                last.pixel_accuracy, last.iou);
  }
  std::printf("\n");
  return kOk;
}

// ---------------------------------------------------------- eval / infer

orch::DataStores data_for_model(const vfis::segnet::ModelConfig& model, const fs::path& data, std::size_t n,
                                std::size_t size, std::uint64_t seed, ds::RoadColor road) {
  const std::size_t target = model.encoder.height;
  orch::DataStores out;
  if (data.empty()) {
    for (auto& p : ds::gen_synthetic(n, size, seed)) {
      if (size != target) p = ds::resize(p, target);
      out.images.insert(p.id, std::move(p.image));
      out.masks.insert(p.id, std::move(p.mask));
    }
    return out;
  }
  out.images = ds::load_image_store(data / "images", target);
  out.masks = ds::load_mask_store(data / "labels", target, road);
  return out;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& data, std::size_t n, std::size_t size,
             std::uint64_t seed, const std::string& road) {
  auto model = orch::load_model(checkpoint);
  const auto stores = data_for_model(model->config(), data, n, size, seed, ds::parse_road_color(road));
  const auto r = orch::evaluate(*model, stores.images, stores.masks);
  std::size_t good = 0;
  for (double v : r.image_iou) good += v >= 0.5 ? 1 : 0;
  std::printf("images=%zu pixel_accuracy=%.6f iou=%.6f mean_image_iou=%.6f images_iou_ge_0.5=%zu\n", r.ids.size(),
              r.pixel_accuracy, r.iou, r.mean_image_iou, good);
  return kOk;
}

ds::Image8 mask_image(const Tensor& mask01) {
  ds::Image8 img;
  img.height = mask01.dim(mask01.rank() - 2);
  img.width = mask01.dim(mask01.rank() - 1);
  img.channels = 1;
  img.pixels.resize(img.width * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = mask01[i] > 0.5 ? 255 : 0;
  return img;
}

ds::Image8 triptych(const std::vector<ds::Image8>& panels) {
  ds::Image8 out;
  out.height = panels.front().height;
  out.width = 0;
  for (const auto& p : panels) out.width += p.width;
  out.channels = 3;
  out.pixels.assign(out.width * out.height * 3, 0);
  std::size_t x0 = 0;
  for (const auto& p : panels) {
    for (std::size_t y = 0; y < p.height; ++y)
      for (std::size_t x = 0; x < p.width; ++x)
        for (std::size_t c = 0; c < 3; ++c)
          out.pixels[(y * out.width + x0 + x) * 3 + c] = p.at(x, y)[p.channels == 1 ? 0 : c];
    x0 += p.width;
  }
  return out;
}

int cmd_infer(const fs::path& checkpoint, const fs::path& images_dir, fs::path labels_dir, const fs::path& out,
              const std::string& road_s) {
  auto model = orch::load_model(checkpoint);
  const std::size_t size = model->config().encoder.height;
  const auto road = ds::parse_road_color(road_s);
  if (labels_dir.empty() && fs::is_directory(images_dir.parent_path() / "labels")) {
    labels_dir = images_dir.parent_path() / "labels";
  }
  fs::create_directories(out);
  std::map<std::uint64_t, fs::path> labels;
  if (!labels_dir.empty() && fs::is_directory(labels_dir)) {
    for (const auto& f : ds::list_samples(labels_dir)) labels[f.id] = f.path;
  }
  std::size_t count = 0, good = 0, with_truth = 0;
  for (const auto& file : ds::list_samples(images_dir)) {
    const std::string stem = file.path.stem().string();
    const Tensor image = ds::resize_bilinear(ds::image_to_tensor(ds::read_png_rgb(file.path)), size, size);
    const Tensor logits = model->predict(image.reshaped({1, 3, size, size}), vfis::numerics::Mode::eval);
    Tensor pred(logits.shape());
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = logits[i] > 0.0 ? 1.0 : 0.0;
    ds::write_png(out / (stem + "_mask.png"), mask_image(pred));

    std::vector<ds::Image8> panels{ds::tensor_to_image(image)};
    if (const auto label = labels.find(file.id); label != labels.end()) {
      const Tensor truth = ds::resize_nearest(ds::mask_from_label(ds::read_png_rgb(label->second), road), size, size);
      panels.push_back(mask_image(truth));
      const double iou = vfis::metrics::jaccard(vfis::metrics::count_confusion(logits, truth.reshaped({1, 1, size, size})));
      std::printf("%s iou=%.4f\n", stem.c_str(), iou);
      ++with_truth;
      good += iou >= 0.5 ? 1 : 0;
    }
    panels.push_back(mask_image(pred));
    ds::write_png(out / (stem + "_triptych.png"), triptych(panels));
    ++count;
  }
  std::printf("wrote %zu mask(s) and triptych(s) to %s", count, out.string().c_str());
  if (with_truth) std::printf("; %zu of %zu with iou >= 0.5", good, with_truth);
  std::printf("\n");
  return kOk;
}

// --------------------------------------------------------------- bench

int cmd_bench(const orch::PartyConfig& cfg, const std::string& features, std::size_t steps) {
  echo_config(cfg);
  const auto counts = parse_size_list(features);
  const auto rows = orch::bench_comm(cfg, counts, steps);
  orch::write_bench_csv(std::cout, rows);
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    std::ofstream f(cfg.out / "bench.csv");
    orch::write_bench_csv(f, rows);
  }
  if (rows.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& r : rows) {
      x.push_back(static_cast<double>(r.features));
      y.push_back(static_cast<double>(r.bytes_per_step));
    }
    const auto fit = orch::affine_fit(x, y);
    std::printf("# bytes_per_step = %.6f * features + %.3f (R^2 = %.9f)\n", fit.slope, fit.intercept, fit.r2);
  }
  return kOk;
}

// ----------------------------------------------------------- gradcheck

int cmd_gradcheck(const std::string& seeds_s, const std::string& only) {
  const auto seeds = parse_seed_list(seeds_s);
  bool ok = true;
  const auto report = [&](const vfis::segnet::GradCheckResult& r) {
    std::printf("%-4s %-20s seed=%llu max_rel_err=%.3e checks=%zu redrawn=%zu %.2fs\n", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), static_cast<unsigned long long>(r.seed), r.max_relative_error, r.comparisons,
                r.redrawn, r.seconds);
    std::fflush(stdout);
    ok = ok && r.passed;
  };
  if (only.empty()) {
    (void)vfis::segnet::run_gradcheck_suite(seeds, vfis::segnet::kGradTolerance, report);
  } else {
    for (auto s : seeds) report(vfis::segnet::run_gradcheck_case(only, s));
  }
  return ok ? kOk : kNumeric;
}

int report_error(const char* kind, const std::exception& e, int code) {
  std::fprintf(stderr, "vfis: %s: %s\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertical federated image segmentation"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic road-scene dataset");
  std::size_t gen_n = 369, gen_size = 128;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "data";
  gen->add_option("--n", gen_n, "Number of image/mask pairs");
  gen->add_option("--size", gen_size, "Square image size (multiple of 32)");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Dataset root");

  auto* train = app.add_subcommand("train", "Train in the both, bottom or top role");
  std::string train_config;
  Overrides train_o;
  train->add_option("--config", train_config, "key=value config file");
  train_o.add(train, "--role", "role", "both | bottom | top");
  train_o.add(train, "--transport", "transport", "loopback | tcp");
  train_o.add(train, "--host", "host", "TCP host");
  train_o.add(train, "--port", "port", "TCP port");
  train_o.add(train, "--key-file", "key_file", "Hex key file (else $VFIS_KEY)");
  train_o.add(train, "--resume", "resume", "true to continue from the checkpoints in --out");
  train_o.add(train, "--features", "features", "Boundary feature count");
  add_common_overrides(train_o, train);

  auto* eval = app.add_subcommand("eval", "Pixel accuracy and IoU of a checkpoint");
  std::string eval_ckpt, eval_data, eval_road = "128,64,128";
  std::size_t eval_n = 369, eval_size = 128;
  std::uint64_t eval_seed = 1;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint directory or file")->required();
  eval->add_option("--data", eval_data, "Dataset root (default: synthetic)");
  eval->add_option("--n", eval_n, "Synthetic sample count");
  eval->add_option("--size", eval_size, "Synthetic generation size");
  eval->add_option("--data-seed", eval_seed, "Synthetic generator seed");
  eval->add_option("--road-color", eval_road, "Label colour of the road class");

  auto* infer = app.add_subcommand("infer", "Predict masks and write triptychs");
  std::string infer_ckpt, infer_images, infer_labels, infer_out = "pred", infer_road = "128,64,128";
  infer->add_option("--checkpoint", infer_ckpt, "Checkpoint directory or file")->required();
  infer->add_option("--images", infer_images, "Directory of PNG images")->required();
  infer->add_option("--labels", infer_labels, "Label directory (default: sibling labels/ when present)");
  infer->add_option("--out", infer_out, "Output directory");
  infer->add_option("--road-color", infer_road, "Label colour of the road class");

  auto* bench = app.add_subcommand("bench", "Bytes and steps per second per boundary width");
  std::string bench_config, bench_features = "100,500,1000";
  std::size_t bench_steps = 3;
  Overrides bench_o;
  bench->add_option("--config", bench_config, "key=value config file");
  bench->add_option("--features", bench_features, "Comma-separated feature counts");
  bench->add_option("--steps", bench_steps, "Measured steps per feature count");
  add_common_overrides(bench_o, bench);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  std::string grad_seeds = "0-4", grad_case;
  grad->add_option("--seeds", grad_seeds, "Seeds, e.g. 0-4 or 0,3");
  grad->add_option("--case", grad_case, "Run only this case");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen_data(gen_n, gen_size, gen_seed, gen_out);
    if (*train) return cmd_train(resolve(train_config, train_o));
    if (*eval) return cmd_eval(eval_ckpt, eval_data, eval_n, eval_size, eval_seed, eval_road);
    if (*infer) return cmd_infer(infer_ckpt, infer_images, infer_labels, infer_out, infer_road);
    if (*bench) {
      auto cfg = resolve(bench_config, bench_o);
      if (cfg.out == "out") cfg.out.clear();
      return cmd_bench(cfg, bench_features, bench_steps);
    }
    if (*grad) return cmd_gradcheck(grad_seeds, grad_case);
  } catch (const vfis::ConfigError& e) {
    return report_error("config error", e, kConfig);
  } catch (const vfis::ProtocolError& e) {
    return report_error("protocol error", e, kProtocol);
  } catch (const vfis::CryptoError& e) {
    return report_error("crypto error", e, kProtocol);
  } catch (const vfis::TransportError& e) {
    return report_error("transport error", e, kProtocol);
  } catch (const orch::CheckpointError& e) {
    return report_error("checkpoint error", e, kData);
  } catch (const vfis::DataError& e) {
    return report_error("data error", e, kData);
  } catch (const vfis::ValidationError& e) {
    return report_error("validation error", e, kData);
  } catch (const vfis::DimensionError& e) {
    return report_error("dimension error", e, kData);
  } catch (const vfis::NumericError& e) {
    return report_error("numeric error", e, kNumeric);
  } catch (const std::exception& e) {
    return report_error("error", e, kOther);
  }
  return kOther;
}

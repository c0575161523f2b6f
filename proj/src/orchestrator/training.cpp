// SPDX-License-Identifier: Apache-2.0

#include "vfis/orchestrator/training.hpp"

#include <sodium.h>

#include <exception>
#include <fstream>
#include <iostream>
#include <thread>

#include "vfis/errors.hpp"
#include "vfis/metrics/log.hpp"
#include "vfis/orchestrator/checkpoint.hpp"
#include "vfis/datasets/synthetic.hpp"

namespace vfis::orchestrator {

namespace fs = std::filesystem;
using numerics::Mode;

segnet::ModelConfig model_config(const PartyConfig& cfg) {
  return segnet::make_preset(cfg.preset, cfg.features, cfg.batchnorm);
}

SessionSettings session_settings(const PartyConfig& cfg, bool bottom) {
  SessionSettings s;
  s.model = model_config(cfg);
  s.batch_size = cfg.batch_size;
  s.seed = cfg.seed;
  s.epochs = cfg.epochs;
  s.float_width = cfg.float_width;
  s.report_metrics = cfg.report_metrics;
  s.optimizer = cfg.optimizer;
  if (!cfg.out.empty()) s.checkpoint = bottom ? cfg.bottom_checkpoint() : cfg.top_checkpoint();
  s.resume = cfg.resume;
  s.stop_after = cfg.stop_after;
  if (bottom) s.init_weights = cfg.init_weights;
  return s;
}

DataStores load_data(const PartyConfig& cfg, bool want_images, bool want_masks) {
  const auto model = model_config(cfg);
  const std::size_t size = model.encoder.height;
  DataStores out;
  if (cfg.data.empty()) {
    auto pairs = datasets::gen_synthetic(cfg.data_n, cfg.data_size, cfg.data_seed);
    for (auto& p : pairs) {
      if (cfg.data_size != size) p = datasets::resize(p, size);
      if (want_images) out.images.insert(p.id, std::move(p.image));
      if (want_masks) out.masks.insert(p.id, std::move(p.mask));
    }
    return out;
  }
  if (want_images) out.images = datasets::load_image_store(cfg.data / "images", size);
  if (want_masks) out.masks = datasets::load_mask_store(cfg.data / "labels", size, cfg.road_color);
  return out;
}

protocol::Key resolve_key(const PartyConfig& cfg, bool allow_random) {
  if (!cfg.key_file.empty()) return protocol::read_key_file(cfg.key_file);
  if (auto k = protocol::key_from_env()) return *k;
  if (!allow_random) throw ConfigError("no key: set key_file or the VFIS_KEY environment variable");
  if (sodium_init() < 0) throw CryptoError("libsodium initialisation failed");
  protocol::Key k;
  randombytes_buf(k.data(), k.size());
  return k;
}

// --------------------------------------------------------------- loopback

LoopbackSession::LoopbackSession(const PartyConfig& cfg, const datasets::TensorStore& images,
                                 const datasets::TensorStore& masks, const protocol::Key& key,
                                 metrics::MetricsLog* log)
    : key_(key), bottom_(session_settings(cfg, true), images), top_(session_settings(cfg, false), masks, log) {}

void LoopbackSession::run(const PartyHooks& bottom_hooks, const PartyHooks& top_hooks) {
  std::exception_ptr top_error, bottom_error;
  std::thread top_thread([&] {
    try {
      SecureChannel ch(link_.top(), key_, Direction::top_to_bottom);
      top_.run(ch, top_hooks);
    } catch (...) {
      top_error = std::current_exception();
      link_.close();
    }
  });
  try {
    SecureChannel ch(link_.bottom(), key_, Direction::bottom_to_top);
    bottom_.run(ch, bottom_hooks);
  } catch (...) {
    bottom_error = std::current_exception();
    link_.close();
  }
  top_thread.join();
  // A closed link is only the echo of the other side's failure.
  const auto is_transport = [](const std::exception_ptr& e) {
    try {
      std::rethrow_exception(e);
    } catch (const TransportError&) {
      return true;
    } catch (...) {
      return false;
    }
  };
  if (bottom_error && top_error && is_transport(bottom_error)) std::rethrow_exception(top_error);
  if (bottom_error) std::rethrow_exception(bottom_error);
  if (top_error) std::rethrow_exception(top_error);
}

// --------------------------------------------------------------- training

namespace {

void write_reports(const PartyConfig& cfg) {
  const auto log = metrics::read_metrics_log(cfg.metrics_path());
  for (const auto& e : log.errors) std::cerr << cfg.metrics_path().string() << ":" << e.line << ": " << e.message << "\n";
  metrics::write_metrics_csv(cfg.out / "metrics.csv", log.records);
  if (!log.records.empty()) (void)metrics::write_metrics_svg(cfg.out / "metrics.svg", log.records);
}

std::unique_ptr<metrics::MetricsLog> open_log(const PartyConfig& cfg) {
  if (!cfg.resume) fs::remove(cfg.metrics_path());
  if (cfg.metrics_path().has_parent_path()) fs::create_directories(cfg.metrics_path().parent_path());
  return std::make_unique<metrics::MetricsLog>(cfg.metrics_path());
}

RunReport report_from(const TopParty* top, std::uint32_t epochs) {
  RunReport r;
  r.epochs_completed = epochs;
  if (top) {
    r.history = top->history();
    r.steps = r.history.size();
  }
  return r;
}

}  // namespace

RunReport run_training(const PartyConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out);
  switch (cfg.role) {
    case Role::both: {
      const DataStores data = load_data(cfg, true, true);
      auto log = open_log(cfg);
      LoopbackSession session(cfg, data.images, data.masks, resolve_key(cfg, true), log.get());
      session.link().set_recording(false);
      session.run();
      log.reset();
      write_reports(cfg);
      return report_from(&session.top(), session.top().next_epoch());
    }
    case Role::bottom: {
      const DataStores data = load_data(cfg, true, false);
      const auto key = resolve_key(cfg, false);
      BottomParty party(session_settings(cfg, true), data.images);
      TcpListener listener(cfg.host, cfg.port);
      if (!cfg.port_file.empty()) {
        std::ofstream(cfg.port_file) << listener.port() << "\n";
      }
      auto conn = listener.accept(cfg.connect_timeout);
      SecureChannel ch(*conn, key, Direction::bottom_to_top);
      party.run(ch);
      return report_from(nullptr, party.next_epoch());
    }
    case Role::top: {
      const DataStores data = load_data(cfg, false, true);
      const auto key = resolve_key(cfg, false);
      auto log = open_log(cfg);
      TopParty party(session_settings(cfg, false), data.masks, log.get());
      auto conn = tcp_connect(cfg.host, cfg.port, cfg.connect_timeout);
      SecureChannel ch(*conn, key, Direction::top_to_bottom);
      party.run(ch);
      log.reset();
      write_reports(cfg);
      return report_from(&party, party.next_epoch());
    }
  }
  throw ConfigError("unknown role");
}

// ------------------------------------------------------------- monolithic

MonolithicTrainer::MonolithicTrainer(const segnet::ModelConfig& model, std::uint64_t seed,
                                     const numerics::OptimizerSettings& opt)
    : seed_(seed), model_(model, seed), optimizer_(opt, model_.params()) {}

void MonolithicTrainer::train(const DataStores& data, std::uint32_t batch, std::uint32_t first_epoch,
                              std::uint32_t end_epoch, const StepHook& hook) {
  std::vector<std::uint64_t> aligned;
  for (auto id : data.images.ids())
    if (data.masks.contains(id)) aligned.push_back(id);
  for (std::uint32_t epoch = first_epoch; epoch < end_epoch; ++epoch) {
    const auto schedule = batch_schedule(seed_, epoch, aligned, batch);
    for (std::uint32_t step = 0; step < schedule.size(); ++step) {
      const auto& ids = schedule[step];
      const auto out = segnet::monolithic_step(model_, data.images.batch(ids), data.masks.batch(ids), optimizer_);
      if (hook) hook(epoch, step, out);
    }
  }
}

// ------------------------------------------------------------- evaluation

EvalReport evaluate(segnet::SegmentationModel& model, const datasets::TensorStore& images,
                    const datasets::TensorStore& masks, std::size_t batch) {
  EvalReport r;
  for (auto id : images.ids())
    if (masks.contains(id)) r.ids.push_back(id);
  if (r.ids.empty()) throw DataError("no sample has both an image and a mask");
  for (std::size_t first = 0; first < r.ids.size(); first += batch) {
    const std::size_t n = std::min(batch, r.ids.size() - first);
    const std::span<const std::uint64_t> ids(r.ids.data() + first, n);
    const Tensor logits = model.predict(images.batch(ids), Mode::eval);
    const Tensor m = masks.batch(ids);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = metrics::count_confusion(logits.slice_batch(i, 1), m.slice_batch(i, 1));
      r.counts += c;
      r.image_iou.push_back(metrics::jaccard(c));
    }
  }
  r.pixel_accuracy = metrics::pixel_accuracy(r.counts);
  r.iou = metrics::jaccard(r.counts);
  double s = 0.0;
  for (double v : r.image_iou) s += v;
  r.mean_image_iou = s / static_cast<double>(r.image_iou.size());
  return r;
}

std::unique_ptr<segnet::SegmentationModel> load_model(const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw CheckpointError("checkpoint " + checkpoint.string() + " does not exist");
  if (fs::is_directory(checkpoint)) {
    const fs::path b = checkpoint / "bottom.ckpt", t = checkpoint / "top.ckpt";
    const auto cfg = model_config_from(b);
    const auto top_cfg = model_config_from(t);
    if (top_cfg.segments != cfg.segments || top_cfg.preset() != cfg.preset()) {
      throw CheckpointError("bottom and top checkpoints in " + checkpoint.string() + " describe different models");
    }
    auto model = std::make_unique<segnet::SegmentationModel>(cfg, 0);
    load_checkpoint(b, cfg.preset(), model->bottom().tensors(), Strictness::subset);
    load_checkpoint(t, cfg.preset(), model->top().tensors(), Strictness::subset);
    return model;
  }
  const auto cfg = model_config_from(checkpoint);
  auto model = std::make_unique<segnet::SegmentationModel>(cfg, 0);
  load_checkpoint(checkpoint, cfg.preset(), model->tensors(), Strictness::subset);
  return model;
}

}  // namespace vfis::orchestrator

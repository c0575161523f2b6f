// SPDX-License-Identifier: Apache-2.0

#include "vfis/orchestrator/parties.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

#include "vfis/errors.hpp"
#include "vfis/orchestrator/checkpoint.hpp"
#include "vfis/protocol/align.hpp"

namespace vfis::orchestrator {

namespace p = protocol;
using numerics::Mode;
using numerics::NamedTensor;

namespace {

// meta/session: next epoch, optimizer steps, feature count, batch-norm flag.
constexpr const char* kMetaName = "meta/session";

Tensor make_meta(const segnet::ModelConfig& m) {
  return Tensor({4}, {0.0, 0.0, static_cast<double>(m.segments.total()), m.encoder.batchnorm ? 1.0 : 0.0});
}

std::vector<std::uint32_t> segment_list(const segnet::ModelConfig& m) {
  return {m.segments.lengths.begin(), m.segments.lengths.end()};
}

p::Hello base_hello(const SessionSettings& s, std::uint8_t role, std::uint32_t start_epoch) {
  p::Hello h;
  h.role = role;
  h.preset = s.model.preset();
  h.batch_size = s.batch_size;
  h.seed = s.seed;
  h.float_width = s.float_width;
  h.epochs = s.epochs;
  h.start_epoch = start_epoch;
  h.segments = segment_list(s.model);
  h.report_metrics = s.report_metrics;
  return h;
}

[[noreturn]] void refuse(SecureChannel& ch, p::ErrorCode code, const std::string& field, const std::string& message) {
  try {
    ch.send(p::make_error({code, field, message}));
  } catch (const Error&) {
  }
  throw ProtocolError(message);
}

void resume_from(const SessionSettings& s, std::vector<NamedTensor> state, const Tensor& meta,
                 numerics::Optimizer& opt, std::uint32_t& next_epoch) {
  if (!s.resume) return;
  if (s.checkpoint.empty() || !std::filesystem::exists(s.checkpoint)) {
    throw ConfigError("resume requested but checkpoint '" + s.checkpoint.string() + "' does not exist");
  }
  load_checkpoint(s.checkpoint, s.model.preset(), state, Strictness::exact);
  if (meta[2] != static_cast<double>(s.model.segments.total()) || meta[3] != (s.model.encoder.batchnorm ? 1.0 : 0.0)) {
    throw CheckpointError("checkpoint " + s.checkpoint.string() + " was written for a different model configuration");
  }
  next_epoch = static_cast<std::uint32_t>(meta[0]);
  opt.set_steps_taken(static_cast<std::uint64_t>(meta[1]));
}

std::vector<NamedTensor> party_state(std::vector<NamedTensor> model, numerics::Optimizer& opt, Tensor& meta) {
  auto o = opt.state();
  model.insert(model.end(), o.begin(), o.end());
  model.push_back({kMetaName, &meta});
  return model;
}

p::BatchTensor to_batch(std::uint32_t epoch, std::uint32_t step, const BatchIds& ids, const Tensor& t) {
  p::BatchTensor b;
  b.epoch = epoch;
  b.step = step;
  b.features = static_cast<std::uint32_t>(t.dim(1));
  b.sample_ids = ids;
  b.elements.assign(t.values().begin(), t.values().end());
  return b;
}

/// Empty string when the batch matches what this party expects.
std::string batch_problem(const p::BatchTensor& b, std::uint32_t epoch, std::uint32_t step, const BatchIds& ids,
                          std::size_t features) {
  if (b.epoch != epoch || b.step != step) {
    return "expected epoch " + std::to_string(epoch) + " step " + std::to_string(step) + ", peer sent epoch " +
           std::to_string(b.epoch) + " step " + std::to_string(b.step);
  }
  if (b.sample_ids != ids) return "sample ids differ from the locally derived schedule";
  if (b.features != features || b.elements.size() != ids.size() * features) {
    return "expected " + std::to_string(ids.size()) + "x" + std::to_string(features) + " elements, got " +
           std::to_string(b.elements.size()) + " with features=" + std::to_string(b.features);
  }
  return {};
}

}  // namespace

std::optional<std::string> hello_mismatch(const p::Hello& a, const p::Hello& b) {
  if (a.role == b.role) return "role";
  if (a.preset != b.preset) return "preset";
  if (a.batch_size != b.batch_size) return "batch_size";
  if (a.seed != b.seed) return "seed";
  if (a.float_width != b.float_width) return "float_width";
  if (a.epochs != b.epochs) return "epochs";
  if (a.start_epoch != b.start_epoch) return "start_epoch";
  if (a.segments != b.segments) return "segments";
  if (a.report_metrics != b.report_metrics) return "report_metrics";
  return std::nullopt;
}

std::string digest_tensors(const std::vector<NamedTensor>& tensors) {
  if (sodium_init() < 0) throw CryptoError("libsodium initialisation failed");
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, 32);
  for (const auto& nt : tensors) {
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(nt.name.data()), nt.name.size());
    for (auto e : nt.tensor->shape()) {
      const std::uint64_t v = e;
      crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(&v), sizeof v);
    }
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(nt.tensor->data()),
                              nt.tensor->size() * sizeof(double));
  }
  p::Bytes out(32);
  crypto_generichash_final(&st, out.data(), out.size());
  return p::to_hex(out);
}

// ------------------------------------------------------------------ bottom

BottomParty::BottomParty(SessionSettings settings, const datasets::TensorStore& images)
    : s_(std::move(settings)),
      images_(images),
      model_(s_.model, s_.seed),
      optimizer_(s_.optimizer, model_.params()),
      meta_(make_meta(s_.model)) {
  if (!s_.resume && !s_.init_weights.empty()) (void)import_weights(s_.init_weights, s_.model.preset(), model_.tensors());
  resume_from(s_, state(), meta_, optimizer_, next_epoch_);
}

std::vector<NamedTensor> BottomParty::state() { return party_state(model_.tensors(), optimizer_, meta_); }

void BottomParty::save() {
  if (s_.checkpoint.empty()) return;
  meta_[0] = next_epoch_;
  meta_[1] = static_cast<double>(optimizer_.steps_taken());
  save_checkpoint(s_.checkpoint, s_.model.preset(), state());
}

p::Hello BottomParty::hello() const { return base_hello(s_, 0, next_epoch_); }

void BottomParty::run(SecureChannel& ch, const PartyHooks& hooks) {
  const p::Hello mine = hello();
  ch.send(p::make_hello(mine));
  p::Envelope env = ch.receive();
  p::expect_type(env, p::MsgType::hello);
  if (auto field = hello_mismatch(mine, p::parse_hello(env))) {
    refuse(ch, p::ErrorCode::negotiation, *field, "HELLO negotiation mismatch on field '" + *field + "'");
  }

  ch.send(p::make_align_request({images_.ids()}));
  env = ch.receive();
  p::expect_type(env, p::MsgType::align_response);
  aligned_ = p::parse_align_response(env).ids;
  if (aligned_.empty()) refuse(ch, p::ErrorCode::alignment, "ids", "entity alignment is empty; refusing to train");
  for (auto id : aligned_) {
    if (!images_.contains(id)) throw DataError("aligned id " + std::to_string(id) + " is missing from the image store");
  }
  if (steps_per_epoch(aligned_.size(), s_.batch_size) == 0) {
    refuse(ch, p::ErrorCode::alignment, "batch_size", "fewer aligned samples than one batch");
  }

  const std::size_t features = s_.model.segments.total();
  for (std::uint32_t epoch = next_epoch_; epoch < s_.end_epoch(); ++epoch) {
    const auto schedule = batch_schedule(s_.seed, epoch, aligned_, s_.batch_size);
    for (std::uint32_t step = 0; step < schedule.size(); ++step) {
      const BatchIds& ids = schedule[step];
      optimizer_.zero_grad();
      const Tensor feats = model_.forward(images_.batch(ids), Mode::train);
      ch.send(p::make_activations(to_batch(epoch, step, ids, feats), s_.float_width));

      env = ch.receive();
      p::expect_type(env, p::MsgType::batch_gradients);
      p::BatchTensor grad = p::parse_gradients(env);
      if (auto problem = batch_problem(grad, epoch, step, ids, features); !problem.empty()) {
        refuse(ch, p::ErrorCode::schedule, "step", "BATCH_GRADIENTS: " + problem);
      }
      model_.backward(Tensor({ids.size(), features}, std::move(grad.elements)));
      optimizer_.step();
      if (hooks.after_step) hooks.after_step(epoch, step);
    }
    if (s_.report_metrics) {
      env = ch.receive();
      p::expect_type(env, p::MsgType::metrics_report);
      reports_.push_back(p::parse_metrics_report(env));
    }
    next_epoch_ = epoch + 1;
    save();
    if (hooks.after_epoch) hooks.after_epoch(epoch);
  }
  ch.send(p::make_shutdown({next_epoch_ < s_.epochs ? 1u : 0u}));
}

// --------------------------------------------------------------------- top

TopParty::TopParty(SessionSettings settings, const datasets::TensorStore& masks, metrics::MetricsLog* log)
    : s_(std::move(settings)),
      masks_(masks),
      log_(log),
      model_(s_.model, s_.seed),
      optimizer_(s_.optimizer, model_.params()),
      meta_(make_meta(s_.model)) {
  resume_from(s_, state(), meta_, optimizer_, next_epoch_);
}

std::vector<NamedTensor> TopParty::state() { return party_state(model_.tensors(), optimizer_, meta_); }

void TopParty::save() {
  if (s_.checkpoint.empty()) return;
  meta_[0] = next_epoch_;
  meta_[1] = static_cast<double>(optimizer_.steps_taken());
  save_checkpoint(s_.checkpoint, s_.model.preset(), state());
}

p::Hello TopParty::hello() const { return base_hello(s_, 1, next_epoch_); }

void TopParty::run(SecureChannel& ch, const PartyHooks& hooks) {
  p::Envelope env = ch.receive();
  p::expect_type(env, p::MsgType::hello);
  const p::Hello peer = p::parse_hello(env);
  const p::Hello mine = hello();
  if (auto field = hello_mismatch(mine, peer)) {
    refuse(ch, p::ErrorCode::negotiation, *field, "HELLO negotiation mismatch on field '" + *field + "'");
  }
  ch.send(p::make_hello(mine));

  env = ch.receive();
  p::expect_type(env, p::MsgType::align_request);
  const auto peer_ids = p::parse_align_request(env).ids;
  const auto local_ids = masks_.ids();
  std::vector<std::uint64_t> aligned;
  try {
    aligned = p::entity_align(local_ids, peer_ids);
  } catch (const ValidationError& e) {
    refuse(ch, p::ErrorCode::alignment, "ids", e.what());
  }
  ch.send(p::make_align_response({aligned}));
  if (aligned.empty()) {
    // The bottom answers an empty alignment with ERROR; surface it.
    env = ch.receive();
    p::expect_type(env, p::MsgType::shutdown);
    throw ProtocolError("entity alignment is empty; refusing to train");
  }
  if (steps_per_epoch(aligned.size(), s_.batch_size) == 0) {
    env = ch.receive();
    p::expect_type(env, p::MsgType::shutdown);
    throw ProtocolError("fewer aligned samples than one batch");
  }

  const std::size_t features = s_.model.segments.total();
  const std::size_t steps = steps_per_epoch(aligned.size(), s_.batch_size);
  for (std::uint32_t epoch = next_epoch_; epoch < s_.end_epoch(); ++epoch) {
    const auto schedule = batch_schedule(s_.seed, epoch, aligned, s_.batch_size);
    metrics::ConfusionCounts epoch_counts;
    double epoch_loss = 0.0;
    for (std::uint32_t step = 0; step < schedule.size(); ++step) {
      const BatchIds& ids = schedule[step];
      env = ch.receive();
      p::expect_type(env, p::MsgType::batch_activations);
      p::BatchTensor act = p::parse_activations(env);
      if (auto problem = batch_problem(act, epoch, step, ids, features); !problem.empty()) {
        refuse(ch, p::ErrorCode::schedule, "step", "BATCH_ACTIVATIONS: " + problem);
      }

      optimizer_.zero_grad();
      const Tensor masks = masks_.batch(ids);
      const Tensor logits = model_.forward(Tensor({ids.size(), features}, std::move(act.elements)));
      const auto loss = numerics::bce_with_logits(logits, masks);
      const auto counts = metrics::count_confusion(logits, masks);
      const Tensor grad = model_.backward(loss.grad);
      ch.send(p::make_gradients(to_batch(epoch, step, ids, grad), s_.float_width));
      optimizer_.step();

      metrics::BatchMetrics rec;
      rec.epoch = epoch;
      rec.step = static_cast<std::uint64_t>(epoch) * steps + step + 1;
      rec.sample_ids = ids;
      rec.loss = loss.loss;
      rec.pixel_accuracy = metrics::pixel_accuracy(counts);
      rec.iou = metrics::jaccard(counts);
      rec.timestamp = metrics::now_unix_ms();
      if (log_) log_->append(rec);
      history_.push_back(std::move(rec));
      epoch_counts += counts;
      epoch_loss += loss.loss;
      if (hooks.after_step) hooks.after_step(epoch, step);
    }
    if (s_.report_metrics) {
      ch.send(p::make_metrics_report({epoch, static_cast<std::uint32_t>(schedule.size()),
                                      epoch_loss / static_cast<double>(schedule.size()),
                                      metrics::pixel_accuracy(epoch_counts), metrics::jaccard(epoch_counts)}));
    }
    next_epoch_ = epoch + 1;
    save();
    if (hooks.after_epoch) hooks.after_epoch(epoch);
  }
  env = ch.receive();
  p::expect_type(env, p::MsgType::shutdown);
}

segnet::ModelConfig model_config_from(const std::filesystem::path& path) {
  const Checkpoint ck = read_checkpoint(path);
  const Tensor* meta = ck.find(kMetaName);
  if (!meta || meta->size() != 4) throw CheckpointError(path.string() + ": no session metadata");
  return segnet::make_preset(ck.preset, static_cast<std::size_t>((*meta)[2]), (*meta)[3] != 0.0);
}

}  // namespace vfis::orchestrator

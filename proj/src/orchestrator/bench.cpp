// SPDX-License-Identifier: Apache-2.0

#include "vfis/orchestrator/bench.hpp"

#include <chrono>

#include "vfis/errors.hpp"
#include "vfis/orchestrator/training.hpp"

namespace vfis::orchestrator {

namespace p = protocol;

std::vector<BenchRow> bench_comm(const PartyConfig& base, std::span<const std::size_t> feature_counts,
                                 std::size_t steps) {
  if (steps == 0) throw ConfigError("bench needs at least one step");
  for (auto f : feature_counts) {
    if (f < segnet::kStages) {
      throw ConfigError("bench: " + std::to_string(f) + " features rejected (minimum 5, one per segment)");
    }
  }
  std::vector<BenchRow> rows;
  for (auto f : feature_counts) {
    PartyConfig cfg = base;
    cfg.role = Role::both;
    cfg.features = f;
    cfg.epochs = 1;
    cfg.stop_after = 0;
    cfg.resume = false;
    cfg.report_metrics = false;
    cfg.data.clear();
    cfg.data_n = steps * cfg.batch_size;
    cfg.out.clear();
    cfg.validate();
    const DataStores data = load_data(cfg, true, true);
    LoopbackSession session(cfg, data.images, data.masks, resolve_key(cfg, true));
    const auto t0 = std::chrono::steady_clock::now();
    session.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    BenchRow row;
    row.features = f;
    row.activation_payload = p::batch_payload_size(cfg.batch_size, f, cfg.float_width);
    std::size_t act_bytes = 0, grad_bytes = 0, acts = 0, grads = 0;
    for (const auto& fr : session.link().recorded()) {
      const auto h = p::parse_header(fr.bytes);
      if (h->type == p::MsgType::batch_activations) {
        act_bytes += fr.bytes.size();
        ++acts;
        row.activation_frame = fr.bytes.size();
      } else if (h->type == p::MsgType::batch_gradients) {
        grad_bytes += fr.bytes.size();
        ++grads;
        row.gradient_frame = fr.bytes.size();
      }
    }
    row.steps = acts;
    row.bytes_per_step = acts ? (act_bytes + grad_bytes) / acts : 0;
    row.seconds = secs;
    row.steps_per_second = secs > 0 ? static_cast<double>(acts) / secs : 0.0;
    row.steps_per_epoch = steps_per_epoch(base.data_n, base.batch_size);
    row.bytes_per_epoch = row.bytes_per_step * row.steps_per_epoch;
    (void)grads;
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "features,activation_payload,activation_frame,gradient_frame,bytes_per_step,steps,seconds,steps_per_second,"
         "steps_per_epoch,bytes_per_epoch\n";
  for (const auto& r : rows) {
    out << r.features << ',' << r.activation_payload << ',' << r.activation_frame << ',' << r.gradient_frame << ','
        << r.bytes_per_step << ',' << r.steps << ',' << r.seconds << ',' << r.steps_per_second << ','
        << r.steps_per_epoch << ',' << r.bytes_per_epoch << '\n';
  }
}

AffineFit affine_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("affine fit needs two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw ValidationError("affine fit needs distinct x values");
  AffineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

}  // namespace vfis::orchestrator

// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <string_view>
#include <unordered_set>

#include "vfis/errors.hpp"
#include "vfis/orchestrator/training.hpp"
#include "vfis/protocol/messages.hpp"

namespace vfis::orchestrator {

namespace p = protocol;

namespace {

constexpr std::size_t kDoubleRun = 4;  // consecutive pixels per probe
constexpr std::size_t kByteRun = 16;

using Fingerprints = std::unordered_set<std::size_t>;

std::size_t hash_bytes(const std::uint8_t* b, std::size_t n) {
  return std::hash<std::string_view>{}(std::string_view(reinterpret_cast<const char*>(b), n));
}

bool varies(const std::uint8_t* b, std::size_t n, std::size_t stride) {
  for (std::size_t i = stride; i < n; i += stride)
    if (std::memcmp(b, b + i, stride) != 0) return true;
  return false;
}

template <class Visit>
void add_run(Visit& visit, const std::vector<std::uint8_t>& run, std::size_t stride) {
  if (run.size() >= stride * 2 && varies(run.data(), run.size(), stride)) visit(hash_bytes(run.data(), run.size()));
}

/// Visits the hash of every horizontal pixel run of a [C, H, W] tensor in
/// the encodings a careless implementation might put on the wire.
template <class Visit>
void pixel_runs(const Tensor& t, Visit&& fp) {
  const std::size_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  std::vector<std::uint8_t> run;
  const auto u8 = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      const double* row = t.data() + (ch * h + y) * w;
      for (std::size_t x = 0; x + kDoubleRun <= w; ++x) {
        run.assign(reinterpret_cast<const std::uint8_t*>(row + x),
                   reinterpret_cast<const std::uint8_t*>(row + x + kDoubleRun));
        add_run(fp, run, sizeof(double));
        run.clear();
        for (std::size_t k = 0; k < kDoubleRun; ++k) {
          const float f = static_cast<float>(row[x + k]);
          const auto* b = reinterpret_cast<const std::uint8_t*>(&f);
          run.insert(run.end(), b, b + sizeof f);
        }
        add_run(fp, run, sizeof(float));
      }
      for (std::size_t x = 0; x + kByteRun <= w; ++x) {
        run.clear();
        for (std::size_t k = 0; k < kByteRun; ++k) run.push_back(u8(row[x + k]));
        add_run(fp, run, 1);
        if (c == 1) {
          for (auto& b : run) b = b ? 1 : 0;
          add_run(fp, run, 1);
        }
      }
    }
  }
  if (c == 3) {  // interleaved RGB rows
    for (std::size_t y = 0; y < h; ++y) {
      std::vector<std::uint8_t> row;
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t ch = 0; ch < c; ++ch) row.push_back(u8(t[(ch * h + y) * w + x]));
      for (std::size_t x = 0; x + kByteRun <= row.size(); x += 3) {
        run.assign(row.begin() + static_cast<std::ptrdiff_t>(x), row.begin() + static_cast<std::ptrdiff_t>(x + kByteRun));
        add_run(fp, run, 1);
      }
    }
  }
}

Fingerprints payload_windows(const p::Bytes& payload) {
  Fingerprints fp;
  for (std::size_t n : {kDoubleRun * sizeof(double), kDoubleRun * sizeof(float), kByteRun}) {
    for (std::size_t off = 0; off + n <= payload.size(); ++off) fp.insert(hash_bytes(payload.data() + off, n));
  }
  return fp;
}

/// True when any pixel run of the listed samples occurs in the payload.
bool leaks(const p::Bytes& payload, const datasets::TensorStore& store, const std::vector<std::uint64_t>& ids) {
  if (payload.size() < kByteRun) return false;
  const Fingerprints windows = payload_windows(payload);
  bool hit = false;
  for (auto id : ids) {
    if (!store.contains(id)) continue;
    pixel_runs(store.get(id), [&](std::size_t h) { hit = hit || windows.count(h) != 0; });
    if (hit) return true;
  }
  return false;
}

const std::set<p::MsgType> kBottomSends{p::MsgType::hello, p::MsgType::align_request, p::MsgType::batch_activations,
                                        p::MsgType::shutdown, p::MsgType::error};
const std::set<p::MsgType> kTopSends{p::MsgType::hello, p::MsgType::align_response, p::MsgType::batch_gradients,
                                     p::MsgType::metrics_report, p::MsgType::error};

}  // namespace

AuditReport audit_frames(const std::vector<RecordedFrame>& frames, const p::Key& key,
                         const datasets::TensorStore& images, const datasets::TensorStore& masks, std::size_t batch,
                         std::size_t features, std::uint8_t float_width) {
  AuditReport r;
  std::uint64_t counters[2] = {0, 0};
  const std::size_t expected = p::batch_payload_size(batch, features, float_width);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    const bool from_bottom = f.direction == Direction::bottom_to_top;
    const std::string where = "frame " + std::to_string(i) + (from_bottom ? " (bottom->top)" : " (top->bottom)");
    ++r.frames;
    p::Envelope env;
    try {
      auto d = p::decode_sealed(f.bytes, key, {f.direction, counters[from_bottom ? 0 : 1]++});
      if (!d.complete() || d.consumed != f.bytes.size()) {
        r.violations.push_back(where + ": not exactly one frame");
        continue;
      }
      env = std::move(d.envelope);
    } catch (const Error& e) {
      r.violations.push_back(where + ": does not open: " + e.what());
      continue;
    }
    const auto& allowed = from_bottom ? kBottomSends : kTopSends;
    if (!allowed.count(env.type)) {
      r.violations.push_back(where + ": message type " + p::to_string(env.type) + " not allowed in this direction");
      continue;
    }
    if (env.type == p::MsgType::batch_activations || env.type == p::MsgType::batch_gradients) {
      ++r.batch_frames;
      if (env.payload.size() != expected) {
        r.violations.push_back(where + ": batch payload is " + std::to_string(env.payload.size()) + " bytes, expected " +
                               std::to_string(expected));
        continue;
      }
      const auto bt = from_bottom ? p::parse_activations(env) : p::parse_gradients(env);
      if (bt.sample_ids.size() != batch || bt.features != features) {
        r.violations.push_back(where + ": batch shape differs from the negotiated one");
        continue;
      }
    }
    // Probe against the private data of the sending side.
    const auto& store = from_bottom ? images : masks;
    std::vector<std::uint64_t> ids;
    if (env.type == p::MsgType::batch_activations || env.type == p::MsgType::batch_gradients) {
      ids = (from_bottom ? p::parse_activations(env) : p::parse_gradients(env)).sample_ids;
    } else {
      ids = store.ids();
    }
    if (leaks(env.payload, store, ids)) {
      r.violations.push_back(where + ": payload contains a run of raw " + (from_bottom ? "image" : "mask") + " pixels");
    }
  }
  return r;
}

}  // namespace vfis::orchestrator

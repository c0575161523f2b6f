// SPDX-License-Identifier: Apache-2.0
//
// Typed payloads carried inside envelopes. Every encoder has a matching
// parser that checks the envelope type and rejects trailing bytes.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vfis/protocol/envelope.hpp"

namespace vfis::protocol {

/// Session parameters both parties must agree on before training.
struct Hello {
  std::uint8_t role = 0;  // 0 bottom, 1 top
  std::string preset;
  std::uint32_t batch_size = 0;
  std::uint64_t seed = 0;
  std::uint8_t float_width = 8;  // bytes per element on the wire: 8 or 4
  std::uint32_t epochs = 0;
  std::uint32_t start_epoch = 0;
  std::vector<std::uint32_t> segments;
  bool report_metrics = false;

  friend bool operator==(const Hello&, const Hello&) = default;
};

struct IdList {
  std::vector<std::uint64_t> ids;
  friend bool operator==(const IdList&, const IdList&) = default;
};

/// BATCH_ACTIVATIONS / BATCH_GRADIENTS payload:
///   u32 epoch, u32 step, u32 batch, u32 features,
///   u64 sample_ids[batch],
///   f64|f32 elements[batch * features]   (row-major)
/// The element width is implied by the remaining byte count.
struct BatchTensor {
  std::uint32_t epoch = 0;
  std::uint32_t step = 0;
  std::uint32_t features = 0;
  std::vector<std::uint64_t> sample_ids;
  std::vector<double> elements;

  friend bool operator==(const BatchTensor&, const BatchTensor&) = default;
};

inline constexpr std::size_t kBatchHeaderSize = 16;

/// Closed-form payload size of a BatchTensor message.
[[nodiscard]] constexpr std::size_t batch_payload_size(std::size_t batch, std::size_t features,
                                                       std::size_t float_width = 8) noexcept {
  return kBatchHeaderSize + batch * 8 + batch * features * float_width;
}

struct MetricsReport {
  std::uint32_t epoch = 0;
  std::uint32_t steps = 0;
  double loss = 0.0;
  double pixel_accuracy = 0.0;
  double iou = 0.0;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct CheckpointChunk {
  std::uint32_t index = 0;
  std::uint32_t count = 0;
  Bytes data;
  friend bool operator==(const CheckpointChunk&, const CheckpointChunk&) = default;
};

struct Shutdown {
  std::uint32_t reason = 0;  // 0 = training complete
  friend bool operator==(const Shutdown&, const Shutdown&) = default;
};

enum class ErrorCode : std::uint16_t { negotiation = 1, alignment = 2, schedule = 3, internal = 4 };

struct ErrorMessage {
  ErrorCode code = ErrorCode::internal;
  std::string field;  // the mismatched setting, when applicable
  std::string message;
  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

[[nodiscard]] Envelope make_hello(const Hello& m);
[[nodiscard]] Envelope make_align_request(const IdList& m);
[[nodiscard]] Envelope make_align_response(const IdList& m);
[[nodiscard]] Envelope make_activations(const BatchTensor& m, std::uint8_t float_width = 8);
[[nodiscard]] Envelope make_gradients(const BatchTensor& m, std::uint8_t float_width = 8);
[[nodiscard]] Envelope make_metrics_report(const MetricsReport& m);
[[nodiscard]] Envelope make_checkpoint_chunk(const CheckpointChunk& m);
[[nodiscard]] Envelope make_shutdown(const Shutdown& m);
[[nodiscard]] Envelope make_error(const ErrorMessage& m);

[[nodiscard]] Hello parse_hello(const Envelope& e);
[[nodiscard]] IdList parse_align_request(const Envelope& e);
[[nodiscard]] IdList parse_align_response(const Envelope& e);
[[nodiscard]] BatchTensor parse_activations(const Envelope& e);
[[nodiscard]] BatchTensor parse_gradients(const Envelope& e);
[[nodiscard]] MetricsReport parse_metrics_report(const Envelope& e);
[[nodiscard]] CheckpointChunk parse_checkpoint_chunk(const Envelope& e);
[[nodiscard]] Shutdown parse_shutdown(const Envelope& e);
[[nodiscard]] ErrorMessage parse_error(const Envelope& e);

/// Throws ProtocolError unless e.type == expected. An ERROR envelope is
/// unpacked into the exception message.
void expect_type(const Envelope& e, MsgType expected);

}  // namespace vfis::protocol

// SPDX-License-Identifier: Apache-2.0

#include "vfis/protocol/messages.hpp"

#include "vfis/errors.hpp"

namespace vfis::protocol {

void expect_type(const Envelope& e, MsgType expected) {
  if (e.type == expected) return;
  if (e.type == MsgType::error) {
    const ErrorMessage err = parse_error(e);
    throw ProtocolError("peer reported error" + (err.field.empty() ? std::string() : " in '" + err.field + "'") +
                        ": " + err.message);
  }
  throw ProtocolError("expected " + to_string(expected) + ", received " + to_string(e.type));
}

namespace {
Envelope wrap(MsgType t, Bytes payload) { return Envelope{t, 0, std::move(payload)}; }

ByteReader reader_for(const Envelope& e, MsgType t) {
  expect_type(e, t);
  return ByteReader(e.payload, kHeaderSize);
}

Bytes encode_ids(const IdList& m) {
  ByteWriter w;
  w.u64(m.ids.size());
  for (auto id : m.ids) w.u64(id);
  return w.take();
}

IdList decode_ids(ByteReader r) {
  IdList m;
  const std::uint64_t n = r.u64();
  if (n > r.remaining() / 8) throw ProtocolError("id count exceeds payload", r.offset());
  m.ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) m.ids.push_back(r.u64());
  r.expect_end("id list");
  return m;
}

Bytes encode_batch(const BatchTensor& m, std::uint8_t width) {
  if (width != 8 && width != 4) throw ProtocolError("float width must be 4 or 8");
  const std::size_t batch = m.sample_ids.size();
  if (m.elements.size() != batch * m.features) throw ProtocolError("batch tensor element count != batch * features");
  ByteWriter w;
  w.reserve(batch_payload_size(batch, m.features, width));
  w.u32(m.epoch);
  w.u32(m.step);
  w.u32(static_cast<std::uint32_t>(batch));
  w.u32(m.features);
  for (auto id : m.sample_ids) w.u64(id);
  for (double v : m.elements) {
    if (width == 8) w.f64(v);
    else w.f32(static_cast<float>(v));
  }
  return w.take();
}

BatchTensor decode_batch(ByteReader r) {
  BatchTensor m;
  m.epoch = r.u32();
  m.step = r.u32();
  const std::uint32_t batch = r.u32();
  m.features = r.u32();
  if (batch == 0 || m.features == 0) throw ProtocolError("batch tensor with zero extent", r.offset());
  if (batch > r.remaining() / 8) throw ProtocolError("batch size exceeds payload", r.offset());
  m.sample_ids.reserve(batch);
  for (std::uint32_t i = 0; i < batch; ++i) m.sample_ids.push_back(r.u64());
  const std::size_t count = std::size_t{batch} * m.features;
  const std::size_t rest = r.remaining();
  if (rest == count * 8) {
    m.elements.reserve(count);
    for (std::size_t i = 0; i < count; ++i) m.elements.push_back(r.f64());
  } else if (rest == count * 4) {
    m.elements.reserve(count);
    for (std::size_t i = 0; i < count; ++i) m.elements.push_back(static_cast<double>(r.f32()));
  } else {
    throw ProtocolError("batch tensor body has " + std::to_string(rest) + " bytes, expected " +
                            std::to_string(count * 8) + " or " + std::to_string(count * 4),
                        r.offset());
  }
  return m;
}
}  // namespace

Envelope make_hello(const Hello& m) {
  ByteWriter w;
  w.u8(m.role);
  w.str(m.preset);
  w.u32(m.batch_size);
  w.u64(m.seed);
  w.u8(m.float_width);
  w.u32(m.epochs);
  w.u32(m.start_epoch);
  w.u8(static_cast<std::uint8_t>(m.segments.size()));
  for (auto s : m.segments) w.u32(s);
  w.u8(m.report_metrics ? 1 : 0);
  return wrap(MsgType::hello, w.take());
}

Hello parse_hello(const Envelope& e) {
  ByteReader r = reader_for(e, MsgType::hello);
  Hello m;
  m.role = r.u8();
  m.preset = r.str();
  m.batch_size = r.u32();
  m.seed = r.u64();
  m.float_width = r.u8();
  m.epochs = r.u32();
  m.start_epoch = r.u32();
  const std::size_t n = r.u8();
  for (std::size_t i = 0; i < n; ++i) m.segments.push_back(r.u32());
  const std::uint8_t rm = r.u8();
  if (rm > 1) throw ProtocolError("report_metrics flag must be 0 or 1", r.offset() - 1);
  m.report_metrics = rm == 1;
  r.expect_end("HELLO");
  return m;
}

Envelope make_align_request(const IdList& m) { return wrap(MsgType::align_request, encode_ids(m)); }
Envelope make_align_response(const IdList& m) { return wrap(MsgType::align_response, encode_ids(m)); }
IdList parse_align_request(const Envelope& e) { return decode_ids(reader_for(e, MsgType::align_request)); }
IdList parse_align_response(const Envelope& e) { return decode_ids(reader_for(e, MsgType::align_response)); }

Envelope make_activations(const BatchTensor& m, std::uint8_t w) {
  return wrap(MsgType::batch_activations, encode_batch(m, w));
}
Envelope make_gradients(const BatchTensor& m, std::uint8_t w) { return wrap(MsgType::batch_gradients, encode_batch(m, w)); }
BatchTensor parse_activations(const Envelope& e) { return decode_batch(reader_for(e, MsgType::batch_activations)); }
BatchTensor parse_gradients(const Envelope& e) { return decode_batch(reader_for(e, MsgType::batch_gradients)); }

Envelope make_metrics_report(const MetricsReport& m) {
  ByteWriter w;
  w.u32(m.epoch);
  w.u32(m.steps);
  w.f64(m.loss);
  w.f64(m.pixel_accuracy);
  w.f64(m.iou);
  return wrap(MsgType::metrics_report, w.take());
}

MetricsReport parse_metrics_report(const Envelope& e) {
  ByteReader r = reader_for(e, MsgType::metrics_report);
  MetricsReport m;
  m.epoch = r.u32();
  m.steps = r.u32();
  m.loss = r.f64();
  m.pixel_accuracy = r.f64();
  m.iou = r.f64();
  r.expect_end("METRICS_REPORT");
  return m;
}

Envelope make_checkpoint_chunk(const CheckpointChunk& m) {
  ByteWriter w;
  w.u32(m.index);
  w.u32(m.count);
  w.u64(m.data.size());
  w.bytes(m.data);
  return wrap(MsgType::checkpoint_chunk, w.take());
}

CheckpointChunk parse_checkpoint_chunk(const Envelope& e) {
  ByteReader r = reader_for(e, MsgType::checkpoint_chunk);
  CheckpointChunk m;
  m.index = r.u32();
  m.count = r.u32();
  const std::uint64_t n = r.u64();
  if (n > r.remaining()) throw ProtocolError("chunk length exceeds payload", r.offset());
  auto b = r.bytes(static_cast<std::size_t>(n));
  m.data.assign(b.begin(), b.end());
  r.expect_end("CHECKPOINT_CHUNK");
  return m;
}

Envelope make_shutdown(const Shutdown& m) {
  ByteWriter w;
  w.u32(m.reason);
  return wrap(MsgType::shutdown, w.take());
}

Shutdown parse_shutdown(const Envelope& e) {
  ByteReader r = reader_for(e, MsgType::shutdown);
  Shutdown m{r.u32()};
  r.expect_end("SHUTDOWN");
  return m;
}

Envelope make_error(const ErrorMessage& m) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(m.code));
  w.str(m.field);
  w.str(m.message);
  return wrap(MsgType::error, w.take());
}

ErrorMessage parse_error(const Envelope& e) {
  if (e.type != MsgType::error) throw ProtocolError("expected ERROR, received " + to_string(e.type));
  ByteReader r(e.payload, kHeaderSize);
  ErrorMessage m;
  m.code = static_cast<ErrorCode>(r.u16());
  m.field = r.str();
  m.message = r.str();
  r.expect_end("ERROR");
  return m;
}

}  // namespace vfis::protocol

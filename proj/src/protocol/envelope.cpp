// SPDX-License-Identifier: Apache-2.0

#include "vfis/protocol/envelope.hpp"

#include <algorithm>

#include "vfis/errors.hpp"

namespace vfis::protocol {

std::string to_string(MsgType t) {
  switch (t) {
    case MsgType::hello: return "HELLO";
    case MsgType::align_request: return "ALIGN_REQUEST";
    case MsgType::align_response: return "ALIGN_RESPONSE";
    case MsgType::batch_activations: return "BATCH_ACTIVATIONS";
    case MsgType::batch_gradients: return "BATCH_GRADIENTS";
    case MsgType::metrics_report: return "METRICS_REPORT";
    case MsgType::checkpoint_chunk: return "CHECKPOINT_CHUNK";
    case MsgType::shutdown: return "SHUTDOWN";
    case MsgType::error: return "ERROR";
  }
  return "UNKNOWN(" + std::to_string(static_cast<int>(t)) + ")";
}

std::optional<MsgType> msg_type_from_string(const std::string& s) {
  for (MsgType t : kAllMessageTypes)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::array<std::uint8_t, kHeaderSize> encode_header(const FrameHeader& h) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u16(h.version);
  w.u8(static_cast<std::uint8_t>(h.type));
  w.u8(h.flags);
  w.u64(h.payload_len);
  const Bytes b = w.take();
  std::array<std::uint8_t, kHeaderSize> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

std::optional<FrameHeader> parse_header(ByteView bytes) {
  // Validate as far as the available bytes allow so a corrupt magic is
  // reported before the rest of the header arrives.
  for (std::size_t i = 0; i < kMagic.size() && i < bytes.size(); ++i) {
    if (bytes[i] != kMagic[i]) throw ProtocolError("bad frame magic", i);
  }
  if (bytes.size() < kHeaderSize) return std::nullopt;
  ByteReader r(bytes.first(kHeaderSize));
  (void)r.bytes(4);
  FrameHeader h;
  h.version = r.u16();
  if (h.version != kVersion) {
    throw ProtocolError("unsupported protocol version " + std::to_string(h.version), 4);
  }
  const std::uint8_t t = r.u8();
  if (t < 1 || t > 9) throw ProtocolError("unknown msg_type " + std::to_string(t), 6);
  h.type = static_cast<MsgType>(t);
  h.flags = r.u8();
  if ((h.flags & ~kFlagEncrypted) != 0) throw ProtocolError("unknown flag bits set", 7);
  h.payload_len = r.u64();
  if (h.payload_len > kMaxPayload) throw ProtocolError("payload length exceeds limit", 8);
  return h;
}

Bytes encode(const Envelope& env) {
  if (env.encrypted()) throw ProtocolError("encode: envelope marked encrypted; use encode_sealed");
  const auto header = encode_header({kVersion, env.type, 0, env.payload.size()});
  Bytes out;
  out.reserve(header.size() + env.payload.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), env.payload.begin(), env.payload.end());
  return out;
}

Bytes encode_sealed(const Envelope& env, const Key& key, const Nonce& nonce) {
  const auto header = encode_header({kVersion, env.type, kFlagEncrypted, env.payload.size()});
  const Bytes body = seal(env.payload, key, nonce, header);
  Bytes out;
  out.reserve(header.size() + body.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

namespace {
DecodeResult need_more(std::size_t needed) {
  DecodeResult r;
  r.status = DecodeResult::Status::need_more;
  r.needed = needed;
  return r;
}
}  // namespace

DecodeResult decode(ByteView bytes) {
  const auto header = parse_header(bytes);
  if (!header) return need_more(0);
  if (header->flags & kFlagEncrypted) throw ProtocolError("sealed frame received on a plaintext path", 7);
  const std::size_t total = header->frame_size();
  if (bytes.size() < total) return need_more(total);
  DecodeResult r;
  r.status = DecodeResult::Status::complete;
  r.consumed = total;
  r.envelope.type = header->type;
  r.envelope.flags = 0;
  r.envelope.payload.assign(bytes.begin() + kHeaderSize, bytes.begin() + static_cast<std::ptrdiff_t>(total));
  return r;
}

DecodeResult decode_sealed(ByteView bytes, const Key& key, const Nonce& nonce) {
  const auto header = parse_header(bytes);
  if (!header) return need_more(0);
  if (!(header->flags & kFlagEncrypted)) throw ProtocolError("plaintext frame received on a sealed channel", 7);
  const std::size_t total = header->frame_size();
  if (bytes.size() < total) return need_more(total);
  DecodeResult r;
  r.status = DecodeResult::Status::complete;
  r.consumed = total;
  r.envelope.type = header->type;
  r.envelope.flags = kFlagEncrypted;
  r.envelope.payload = open(bytes.subspan(kHeaderSize, total - kHeaderSize), key, nonce, bytes.first(kHeaderSize));
  return r;
}

}  // namespace vfis::protocol

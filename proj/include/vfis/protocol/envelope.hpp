// SPDX-License-Identifier: Apache-2.0
//
// Frame layout (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "VFIS"
//   4       2     version (currently 1)
//   6       1     msg_type
//   7       1     flags (bit 0: payload sealed; other bits must be zero)
//   8       8     payload_len (plaintext length)
//   16      n     payload, or ciphertext of the same length when sealed
//   16+n    16    authentication tag (sealed frames only)
//
// Sealed frames authenticate the 16 header bytes as associated data.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "vfis/protocol/bytes.hpp"
#include "vfis/protocol/crypto.hpp"

namespace vfis::protocol {

inline constexpr std::array<std::uint8_t, 4> kMagic{'V', 'F', 'I', 'S'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 31;
inline constexpr std::uint8_t kFlagEncrypted = 0x01;

enum class MsgType : std::uint8_t {
  hello = 1,
  align_request = 2,
  align_response = 3,
  batch_activations = 4,
  batch_gradients = 5,
  metrics_report = 6,
  checkpoint_chunk = 7,
  shutdown = 8,
  error = 9,
};

inline constexpr std::array<MsgType, 9> kAllMessageTypes{
    MsgType::hello,           MsgType::align_request,  MsgType::align_response,
    MsgType::batch_activations, MsgType::batch_gradients, MsgType::metrics_report,
    MsgType::checkpoint_chunk, MsgType::shutdown,       MsgType::error};

[[nodiscard]] std::string to_string(MsgType t);
[[nodiscard]] std::optional<MsgType> msg_type_from_string(const std::string& s);

struct Envelope {
  MsgType type = MsgType::hello;
  std::uint8_t flags = 0;
  Bytes payload;

  [[nodiscard]] bool encrypted() const noexcept { return (flags & kFlagEncrypted) != 0; }
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

struct FrameHeader {
  std::uint16_t version = kVersion;
  MsgType type = MsgType::hello;
  std::uint8_t flags = 0;
  std::uint64_t payload_len = 0;

  /// Total frame size including the tag when sealed.
  [[nodiscard]] std::size_t frame_size() const noexcept {
    return kHeaderSize + static_cast<std::size_t>(payload_len) + ((flags & kFlagEncrypted) ? kTagSize : 0);
  }
};

[[nodiscard]] std::array<std::uint8_t, kHeaderSize> encode_header(const FrameHeader& h);
/// nullopt when fewer than kHeaderSize bytes are available; ProtocolError on
/// bad magic/version/type/flags or an oversize length.
[[nodiscard]] std::optional<FrameHeader> parse_header(ByteView bytes);

/// Plaintext frame. The envelope's encrypted flag must be clear.
[[nodiscard]] Bytes encode(const Envelope& env);
/// Sealed frame; the encrypted flag is set on the wire regardless of env.flags.
[[nodiscard]] Bytes encode_sealed(const Envelope& env, const Key& key, const Nonce& nonce);

struct DecodeResult {
  enum class Status { complete, need_more };
  Status status = Status::need_more;
  Envelope envelope;
  std::size_t consumed = 0;  // bytes of the frame when complete
  std::size_t needed = 0;    // total bytes required when need_more (0 = at least a header)

  [[nodiscard]] bool complete() const noexcept { return status == Status::complete; }
};

/// Decodes the first frame in `bytes`. Plaintext frames only: a sealed frame
/// is a ProtocolError here.
[[nodiscard]] DecodeResult decode(ByteView bytes);
/// Decodes and opens a sealed frame. Plaintext frames are rejected, so a
/// flipped flag bit cannot downgrade the channel.
[[nodiscard]] DecodeResult decode_sealed(ByteView bytes, const Key& key, const Nonce& nonce);

}  // namespace vfis::protocol

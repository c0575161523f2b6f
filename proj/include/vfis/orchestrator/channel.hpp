// SPDX-License-Identifier: Apache-2.0
//
// Sealed, ordered message channel over a Transport. Each side keeps one
// nonce sequence per direction; a frame that fails to open, arrives out of
// order or is sent in the clear is a CryptoError / ProtocolError.

#pragma once

#include <cstdint>

#include "vfis/orchestrator/transport.hpp"
#include "vfis/protocol/envelope.hpp"

namespace vfis::orchestrator {

class SecureChannel {
 public:
  SecureChannel(Transport& transport, const protocol::Key& key, Direction outgoing);

  void send(const protocol::Envelope& env);
  [[nodiscard]] protocol::Envelope receive();

  [[nodiscard]] std::uint64_t bytes_sent() const noexcept { return bytes_sent_; }
  [[nodiscard]] std::uint64_t bytes_received() const noexcept { return bytes_received_; }
  [[nodiscard]] std::uint64_t frames_sent() const noexcept { return frames_sent_; }
  [[nodiscard]] Transport& transport() noexcept { return transport_; }

 private:
  Transport& transport_;
  protocol::Key key_;
  protocol::NonceSequence send_nonces_;
  protocol::NonceSequence recv_nonces_;
  std::uint64_t bytes_sent_ = 0, bytes_received_ = 0, frames_sent_ = 0;
};

[[nodiscard]] constexpr Direction opposite(Direction d) noexcept {
  return d == Direction::bottom_to_top ? Direction::top_to_bottom : Direction::bottom_to_top;
}

}  // namespace vfis::orchestrator

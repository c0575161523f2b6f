// SPDX-License-Identifier: Apache-2.0

#include "vfis/orchestrator/channel.hpp"

#include "vfis/errors.hpp"

namespace vfis::orchestrator {

SecureChannel::SecureChannel(Transport& transport, const protocol::Key& key, Direction outgoing)
    : transport_(transport), key_(key), send_nonces_(outgoing), recv_nonces_(opposite(outgoing)) {}

void SecureChannel::send(const protocol::Envelope& env) {
  const Bytes frame = protocol::encode_sealed(env, key_, send_nonces_.next());
  transport_.send_frame(frame);
  bytes_sent_ += frame.size();
  ++frames_sent_;
}

protocol::Envelope SecureChannel::receive() {
  const Bytes frame = transport_.receive_frame();
  const protocol::Nonce nonce = recv_nonces_.peek();
  auto result = protocol::decode_sealed(frame, key_, nonce);
  if (!result.complete() || result.consumed != frame.size()) {
    throw ProtocolError("transport delivered an incomplete or oversized frame");
  }
  recv_nonces_.claim(nonce);
  bytes_received_ += frame.size();
  return std::move(result.envelope);
}

}  // namespace vfis::orchestrator

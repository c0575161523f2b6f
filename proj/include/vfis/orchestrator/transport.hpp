// SPDX-License-Identifier: Apache-2.0
//
// Frame transports. Both deliver whole frames in order; neither looks inside
// beyond the 16-byte header needed to find the frame length.

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vfis/protocol/bytes.hpp"
#include "vfis/protocol/crypto.hpp"

namespace vfis::orchestrator {

using protocol::Bytes;
using protocol::ByteView;
using protocol::Direction;

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send_frame(ByteView frame) = 0;
  /// Blocks for the next frame. TransportError once the peer is gone.
  virtual Bytes receive_frame() = 0;
  virtual void close() noexcept = 0;
};

struct RecordedFrame {
  Direction direction;
  Bytes bytes;
};

/// In-process pair of endpoints. Every frame is also recorded, which is what
/// the information audit inspects.
class LoopbackLink {
 public:
  LoopbackLink();
  ~LoopbackLink();
  LoopbackLink(const LoopbackLink&) = delete;
  LoopbackLink& operator=(const LoopbackLink&) = delete;

  [[nodiscard]] Transport& bottom() noexcept;
  [[nodiscard]] Transport& top() noexcept;
  /// Closes both directions; blocked receivers wake with TransportError.
  void close() noexcept;
  [[nodiscard]] std::vector<RecordedFrame> recorded() const;
  void set_recording(bool on);

 private:
  struct Shared;
  class Endpoint;
  std::shared_ptr<Shared> shared_;
  std::unique_ptr<Endpoint> bottom_, top_;
};

class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(int fd) noexcept : fd_(fd) {}
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  void send_frame(ByteView frame) override;
  Bytes receive_frame() override;
  void close() noexcept override;

 private:
  void read_exact(std::uint8_t* dst, std::size_t n);
  int fd_;
};

class TcpListener {
 public:
  /// Port 0 binds an ephemeral port; see port().
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  [[nodiscard]] std::uint16_t port() const noexcept { return port_; }
  /// Waits up to `timeout_s` seconds (negative: forever).
  [[nodiscard]] std::unique_ptr<TcpTransport> accept(double timeout_s);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Keeps retrying refused connections until `timeout_s` elapses.
[[nodiscard]] std::unique_ptr<TcpTransport> tcp_connect(const std::string& host, std::uint16_t port,
                                                        double timeout_s);

}  // namespace vfis::orchestrator

// SPDX-License-Identifier: Apache-2.0

#include "vfis/orchestrator/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "vfis/errors.hpp"
#include "vfis/protocol/envelope.hpp"

namespace vfis::orchestrator {

// ---------------------------------------------------------------- loopback

struct LoopbackLink::Shared {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> to_top, to_bottom;
  std::vector<RecordedFrame> log;
  bool recording = true;
  bool closed = false;
};

class LoopbackLink::Endpoint final : public Transport {
 public:
  Endpoint(std::shared_ptr<Shared> s, Direction d) : s_(std::move(s)), dir_(d) {}

  void send_frame(ByteView frame) override {
    std::lock_guard lock(s_->mu);
    if (s_->closed) throw TransportError("loopback link is closed");
    Bytes b(frame.begin(), frame.end());
    if (s_->recording) s_->log.push_back({dir_, b});
    outbox().push_back(std::move(b));
    s_->cv.notify_all();
  }

  Bytes receive_frame() override {
    std::unique_lock lock(s_->mu);
    s_->cv.wait(lock, [&] { return s_->closed || !inbox().empty(); });
    if (inbox().empty()) throw TransportError("loopback peer closed the link");
    Bytes b = std::move(inbox().front());
    inbox().pop_front();
    return b;
  }

  void close() noexcept override {
    std::lock_guard lock(s_->mu);
    s_->closed = true;
    s_->cv.notify_all();
  }

 private:
  std::deque<Bytes>& outbox() { return dir_ == Direction::bottom_to_top ? s_->to_top : s_->to_bottom; }
  std::deque<Bytes>& inbox() { return dir_ == Direction::bottom_to_top ? s_->to_bottom : s_->to_top; }

  std::shared_ptr<Shared> s_;
  Direction dir_;
};

LoopbackLink::LoopbackLink()
    : shared_(std::make_shared<Shared>()),
      bottom_(std::make_unique<Endpoint>(shared_, Direction::bottom_to_top)),
      top_(std::make_unique<Endpoint>(shared_, Direction::top_to_bottom)) {}

LoopbackLink::~LoopbackLink() = default;

Transport& LoopbackLink::bottom() noexcept { return *bottom_; }
Transport& LoopbackLink::top() noexcept { return *top_; }
void LoopbackLink::close() noexcept { bottom_->close(); }

std::vector<RecordedFrame> LoopbackLink::recorded() const {
  std::lock_guard lock(shared_->mu);
  return shared_->log;
}

void LoopbackLink::set_recording(bool on) {
  std::lock_guard lock(shared_->mu);
  shared_->recording = on;
}

// --------------------------------------------------------------------- tcp

namespace {

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  const int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) throw TransportError("cannot resolve " + host + ": " + gai_strerror(rc));
  return res;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

TcpTransport::~TcpTransport() { close(); }

void TcpTransport::close() noexcept {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

void TcpTransport::send_frame(ByteView frame) {
  if (fd_ < 0) throw TransportError("tcp connection is closed");
  std::size_t off = 0;
  while (off < frame.size()) {
    const ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("tcp send failed"));
    }
    off += static_cast<std::size_t>(n);
  }
}

void TcpTransport::read_exact(std::uint8_t* dst, std::size_t n) {
  std::size_t off = 0;
  while (off < n) {
    const ssize_t got = ::recv(fd_, dst + off, n - off, 0);
    if (got == 0) throw TransportError("tcp peer closed the connection");
    if (got < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("tcp receive failed"));
    }
    off += static_cast<std::size_t>(got);
  }
}

Bytes TcpTransport::receive_frame() {
  if (fd_ < 0) throw TransportError("tcp connection is closed");
  Bytes frame(protocol::kHeaderSize);
  read_exact(frame.data(), frame.size());
  const auto header = protocol::parse_header(frame);
  frame.resize(header->frame_size());
  read_exact(frame.data() + protocol::kHeaderSize, frame.size() - protocol::kHeaderSize);
  return frame;
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  addrinfo* res = resolve(host, port, true);
  std::string last = "no usable address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 1) == 0) {
      fd_ = fd;
      break;
    }
    last = sys_error("bind " + host + ":" + std::to_string(port));
    ::close(fd);
  }
  freeaddrinfo(res);
  if (fd_ < 0) throw TransportError(last);
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                     : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpTransport> TcpListener::accept(double timeout_s) {
  pollfd p{fd_, POLLIN, 0};
  const int ms = timeout_s < 0 ? -1 : static_cast<int>(timeout_s * 1000.0);
  int rc;
  do {
    rc = ::poll(&p, 1, ms);
  } while (rc < 0 && errno == EINTR);
  if (rc == 0) throw TransportError("no peer connected within " + std::to_string(timeout_s) + " s");
  if (rc < 0) throw TransportError(sys_error("poll"));
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw TransportError(sys_error("accept"));
  set_nodelay(fd);
  return std::make_unique<TcpTransport>(fd);
}

std::unique_ptr<TcpTransport> tcp_connect(const std::string& host, std::uint16_t port, double timeout_s) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(timeout_s);
  std::string last;
  for (;;) {
    addrinfo* res = resolve(host, port, false);
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        freeaddrinfo(res);
        set_nodelay(fd);
        return std::make_unique<TcpTransport>(fd);
      }
      last = sys_error("connect " + host + ":" + std::to_string(port));
      ::close(fd);
    }
    freeaddrinfo(res);
    if (clock::now() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  throw TransportError(last.empty() ? "cannot connect to " + host + ":" + std::to_string(port) : last);
}

}  // namespace vfis::orchestrator

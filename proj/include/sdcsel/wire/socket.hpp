// Copyright 2026 The sdcsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <google/protobuf/io/coded_stream.h>
#include <google/protobuf/message_lite.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <utility>

#include "sdcsel/error.hpp"
#include "sdcsel/protocol.hpp"

namespace sdcsel::wire {

using Clock = std::chrono::steady_clock;
using protocol::FailureKind;
using protocol::ProtocolError;

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }

  // "host:port"
  static Endpoint parse(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
      throw InvalidConfig("endpoint '" + text + "' is not host:port");
    }
    Endpoint ep;
    ep.host = text.substr(0, colon);
    try {
      std::size_t used = 0;
      const int port = std::stoi(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1 || port <= 0 || port > 65535) throw std::out_of_range("port");
      ep.port = static_cast<std::uint16_t>(port);
    } catch (const std::exception&) {
      throw InvalidConfig("endpoint '" + text + "' has an invalid port");
    }
    return ep;
  }
};

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

inline int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return static_cast<int>(std::clamp<long long>(left, 0, 1'000'000));
}

// Both connection failures and connect timeouts count as unreachable.
inline Fd connect_to(const Endpoint& ep, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw ProtocolError(FailureKind::kUnreachable, ep.str() + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    Fd fd(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!fd.valid()) continue;
    set_nonblocking(fd.get());
    int rc = ::connect(fd.get(), ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd p{fd.get(), POLLOUT, 0};
      const int ready = ::poll(&p, 1, remaining_ms(deadline));
      if (ready == 1) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        rc = -1;
        if (ready == 0) errno = ETIMEDOUT;
      }
    }
    if (rc == 0) {
      ::freeaddrinfo(res);
      int one = 1;
      ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return fd;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw ProtocolError(FailureKind::kUnreachable, ep.str() + ": " + last_error);
}

// Throws IoError when the address is taken.
inline Fd listen_on(const std::string& host, std::uint16_t port, std::uint16_t& bound_port) {
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (!fd.valid()) throw IoError(std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw IoError("listen address '" + host + "' is not an IPv4 address");
  }
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw IoError("bind " + host + ":" + std::to_string(port) + ": " + std::strerror(errno));
  }
  if (::listen(fd.get(), 16) != 0) throw IoError(std::string("listen: ") + std::strerror(errno));
  socklen_t len = sizeof addr;
  ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port = ntohs(addr.sin_port);
  set_nonblocking(fd.get());
  return fd;
}

// A non-blocking stream socket carrying varint-length-delimited protobuf
// messages in both directions at once.
class FramedSocket {
 public:
  static constexpr std::size_t kMaxFrame = 64u << 20;

  explicit FramedSocket(Fd fd) : fd_(std::move(fd)) { set_nonblocking(fd_.get()); }

  // Serializes `msg` into the outbound buffer and returns the frame bytes.
  std::string queue(const google::protobuf::MessageLite& msg) {
    std::string body;
    msg.SerializeToString(&body);
    std::string frame(google::protobuf::io::CodedOutputStream::VarintSize32(static_cast<std::uint32_t>(body.size())),
                      '\0');
    google::protobuf::io::CodedOutputStream::WriteVarint32ToArray(static_cast<std::uint32_t>(body.size()),
                                                                  reinterpret_cast<std::uint8_t*>(frame.data()));
    frame += body;
    if (!write_broken_) out_.append(frame);
    return frame;
  }

  bool has_pending_output() const { return out_pos_ < out_.size(); }
  bool peer_closed() const { return eof_; }

  // Pops one complete inbound frame into `msg`, if buffered.
  bool try_pop(google::protobuf::MessageLite& msg) {
    std::uint32_t len = 0;
    std::size_t header = 0;
    for (int shift = 0; shift < 35; shift += 7) {
      if (in_pos_ + header >= in_.size()) return false;
      const auto byte = static_cast<std::uint8_t>(in_[in_pos_ + header++]);
      len |= static_cast<std::uint32_t>(byte & 0x7F) << shift;
      if ((byte & 0x80) == 0) break;
      if (shift == 28) throw ProtocolError(FailureKind::kStreamBroken, "malformed frame length");
    }
    if (len > kMaxFrame) throw ProtocolError(FailureKind::kStreamBroken, "frame too large");
    if (in_.size() - in_pos_ - header < len) return false;
    if (!msg.ParseFromArray(in_.data() + in_pos_ + header, static_cast<int>(len))) {
      throw ProtocolError(FailureKind::kStreamBroken, "undecodable frame");
    }
    in_pos_ += header + len;
    if (in_pos_ == in_.size()) {
      in_.clear();
      in_pos_ = 0;
    } else if (in_pos_ > (1u << 20)) {
      in_.erase(0, in_pos_);
      in_pos_ = 0;
    }
    return true;
  }

  // Waits until the socket can make progress (or `deadline`), then moves
  // whatever bytes it can in either direction. Returns false on timeout.
  bool pump(Clock::time_point deadline) {
    pollfd p{fd_.get(), static_cast<short>((eof_ ? 0 : POLLIN) | (has_pending_output() ? POLLOUT : 0)), 0};
    if (p.events == 0) throw ProtocolError(FailureKind::kStreamBroken, "connection closed by peer");
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc < 0) {
      if (errno == EINTR) return true;
      throw ProtocolError(FailureKind::kStreamBroken, std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) return Clock::now() < deadline;
    if (p.revents & (POLLIN | POLLHUP | POLLERR)) read_available();
    if ((p.revents & POLLOUT) && has_pending_output()) write_available();
    return true;
  }

  void flush(Clock::time_point deadline) {
    while (has_pending_output()) {
      if (!pump(deadline)) throw ProtocolError(FailureKind::kTimeout, "send timed out");
    }
  }

  // Half-closes and drains the peer so a final error frame is not lost to a reset.
  void linger_close(std::chrono::milliseconds grace) {
    const auto deadline = Clock::now() + grace;
    try {
      flush(deadline);
      ::shutdown(fd_.get(), SHUT_WR);
      while (!eof_ && pump(deadline)) {
        in_.clear();
        in_pos_ = 0;
      }
    } catch (const Error&) {
    }
    fd_.reset();
  }

  int fd() const { return fd_.get(); }

 private:
  void read_available() {
    char buf[64 * 1024];
    for (;;) {
      const ssize_t n = ::recv(fd_.get(), buf, sizeof buf, 0);
      if (n > 0) {
        in_.append(buf, static_cast<std::size_t>(n));
        continue;
      }
      if (n == 0) {
        eof_ = true;
        return;
      }
      if (errno == EAGAIN || errno == EWOULDBLOCK) return;
      if (errno == EINTR) continue;
      eof_ = true;  // reset: keep what was read, report on next use
      return;
    }
  }

  void write_available() {
    while (has_pending_output()) {
      const ssize_t n = ::send(fd_.get(), out_.data() + out_pos_, out_.size() - out_pos_, MSG_NOSIGNAL);
      if (n > 0) {
        out_pos_ += static_cast<std::size_t>(n);
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
      if (n < 0 && errno == EINTR) continue;
      // The peer is gone; drop the rest so a pending error frame can still be read.
      out_.clear();
      out_pos_ = 0;
      write_broken_ = true;
      return;
    }
    out_.clear();
    out_pos_ = 0;
  }

  Fd fd_;
  std::string out_;
  std::size_t out_pos_ = 0;
  std::string in_;
  std::size_t in_pos_ = 0;
  bool eof_ = false;
  bool write_broken_ = false;
};

}  // namespace sdcsel::wire

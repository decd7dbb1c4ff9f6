/*
 * Copyright 2026 The vflr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vflr/protocol/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "vflr/common/error.hpp"

namespace vflr::protocol {

namespace {

struct Queue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> items;
  bool closed = false;
};

class InProcessLink final : public Link {
 public:
  InProcessLink(std::shared_ptr<Queue> in, std::shared_ptr<Queue> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~InProcessLink() override { close(); }

  void send(Bytes frame) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw TransportError("link closed");
    out_->items.push_back(std::move(frame));
    out_->cv.notify_all();
  }

  Bytes receive() override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return !in_->items.empty() || in_->closed; });
    // Frames queued before the peer closed are still delivered.
    if (in_->items.empty()) throw TransportError("link closed by peer");
    Bytes out = std::move(in_->items.front());
    in_->items.pop_front();
    return out;
  }

  void close() override {
    for (auto* q : {in_.get(), out_.get()}) {
      std::lock_guard lock(q->mu);
      q->closed = true;
      q->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Queue> in_;
  std::shared_ptr<Queue> out_;
};

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

void write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::send(fd, p, n, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("send"));
    }
    p += k;
    n -= static_cast<std::size_t>(k);
  }
}

void read_all(int fd, std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::recv(fd, p, n, 0);
    if (k == 0) throw TransportError("connection closed by peer");
    if (k < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("recv"));
    }
    p += k;
    n -= static_cast<std::size_t>(k);
  }
}

// Frames larger than this are rejected before allocation.
constexpr std::uint32_t kMaxFrame = 1u << 30;

class TcpLink final : public Link {
 public:
  explicit TcpLink(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpLink() override {
    close();
    if (fd_ >= 0) ::close(fd_);
  }

  void send(Bytes frame) override {
    std::lock_guard lock(send_mu_);
    if (closed_) throw TransportError("link closed");
    write_all(fd_, frame.data(), frame.size());
  }

  // Returns the whole frame including its 4-byte length prefix.
  Bytes receive() override {
    Bytes out(4);
    read_all(fd_, out.data(), 4);
    const std::uint32_t len = (std::uint32_t{out[0]} << 24) |
                              (std::uint32_t{out[1]} << 16) |
                              (std::uint32_t{out[2]} << 8) | out[3];
    if (len > kMaxFrame) throw TransportError("oversized frame");
    out.resize(4 + std::size_t{len});
    read_all(fd_, out.data() + 4, len);
    return out;
  }

  void close() override {
    std::lock_guard lock(send_mu_);
    if (!closed_) {
      closed_ = true;
      ::shutdown(fd_, SHUT_RDWR);
    }
  }

 private:
  int fd_;
  std::mutex send_mu_;
  bool closed_ = false;
};

addrinfo* resolve(const Endpoint& e, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(e.port);
  const int rc = ::getaddrinfo(e.host.empty() ? nullptr : e.host.c_str(),
                               port.c_str(), &hints, &res);
  if (rc != 0) {
    throw TransportError("cannot resolve " + e.host + ": " + gai_strerror(rc));
  }
  return res;
}

}  // namespace

LinkPair make_in_process_link() {
  auto ab = std::make_shared<Queue>();
  auto ba = std::make_shared<Queue>();
  return {std::make_unique<InProcessLink>(ba, ab),
          std::make_unique<InProcessLink>(ab, ba)};
}

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw ConfigError("endpoint must look like host:port, got '" + text + "'");
  }
  Endpoint e;
  e.host = text.substr(0, colon);
  if (e.host.size() >= 2 && e.host.front() == '[' && e.host.back() == ']') {
    e.host = e.host.substr(1, e.host.size() - 2);
  }
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw ConfigError("bad port in endpoint '" + text + "'");
  }
  if (port > 65535) throw ConfigError("port out of range in '" + text + "'");
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

TcpListener::TcpListener(const Endpoint& at) {
  addrinfo* res = resolve(at, true);
  std::string err = "no usable address";
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 8) == 0) {
      fd_ = fd;
      break;
    }
    err = errno_text("bind");
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw TransportError(err);
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&ss), &len);
  port_ = ntohs(ss.ss_family == AF_INET6
                    ? reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port
                    : reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::pair<std::uint8_t, std::unique_ptr<Link>> TcpListener::accept(
    std::chrono::milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (rc == 0) throw TransportError("timed out waiting for a peer");
  if (rc < 0) throw TransportError(errno_text("poll"));
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw TransportError(errno_text("accept"));
  auto link = std::make_unique<TcpLink>(fd);
  std::uint8_t role = 0;
  read_all(fd, &role, 1);
  return {role, std::move(link)};
}

std::unique_ptr<Link> tcp_connect(const Endpoint& to, std::uint8_t role,
                                  std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::string err;
  while (true) {
    addrinfo* res = resolve(to, false);
    int fd = -1;
    for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
      fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
      err = errno_text("connect");
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd >= 0) {
      write_all(fd, &role, 1);
      return std::make_unique<TcpLink>(fd);
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("cannot reach " + to.host + ":" +
                           std::to_string(to.port) + " (" + err + ")");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace vflr::protocol

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

#ifndef VFLR_PROTOCOL_TRANSPORT_HPP_
#define VFLR_PROTOCOL_TRANSPORT_HPP_

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "vflr/common/bytes.hpp"

namespace vflr::protocol {

// One end of a reliable, ordered, bidirectional byte-frame pipe. receive()
// blocks and throws TransportError once the link is closed or broken.
class Link {
 public:
  virtual ~Link() = default;
  virtual void send(Bytes frame) = 0;
  virtual Bytes receive() = 0;
  virtual void close() = 0;
};

using LinkPair = std::pair<std::unique_ptr<Link>, std::unique_ptr<Link>>;

// Two connected in-process endpoints backed by locked queues.
LinkPair make_in_process_link();

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

// "host:port"; throws ConfigError.
Endpoint parse_endpoint(const std::string& text);

// Listening socket; accept() hands back a link for one peer.
class TcpListener {
 public:
  explicit TcpListener(const Endpoint& at);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  // Waits for a peer and reads its one-byte role tag.
  std::pair<std::uint8_t, std::unique_ptr<Link>> accept(
      std::chrono::milliseconds timeout = std::chrono::seconds(60));

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// Connects (retrying until timeout) and sends the one-byte role tag.
std::unique_ptr<Link> tcp_connect(
    const Endpoint& to, std::uint8_t role,
    std::chrono::milliseconds timeout = std::chrono::seconds(60));

}  // namespace vflr::protocol

#endif  // VFLR_PROTOCOL_TRANSPORT_HPP_

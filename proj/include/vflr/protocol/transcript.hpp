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

#ifndef VFLR_PROTOCOL_TRANSCRIPT_HPP_
#define VFLR_PROTOCOL_TRANSCRIPT_HPP_

#include <cstddef>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vflr/common/bytes.hpp"
#include "vflr/protocol/message.hpp"

namespace vflr::protocol {

struct TranscriptEntry {
  Role from = Role::Coordinator;
  Role to = Role::Coordinator;
  MessageKind kind = MessageKind::Abort;
  std::string tag;  // setup, holdout, gradient, loss, finish, abort
  std::size_t epoch = 0;
  std::size_t ciphertexts = 0;
  Bytes payload;
};

// Thread-safe log of every message sent in a session.
class Transcript {
 public:
  void record(TranscriptEntry e);
  std::vector<TranscriptEntry> entries() const;

  // Ciphertexts carried by messages matching tag (empty = any) and, when
  // nonzero, epoch.
  std::size_t ciphertexts(const std::string& tag, std::size_t epoch = 0) const;
  std::size_t bytes() const;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
};

// Values that must never show up in a payload.
struct SensitiveValues {
  std::vector<double> features;  // nonzero entries, matched as BE binary64
  bool labels = true;            // +1.0 / -1.0 as BE binary64
  Bytes mask;                    // the 0/1 mask as one byte string
  std::vector<std::string> entity_ids;
  // Ciphertexts a party must keep. With hidden_owner set, only messages
  // sent by that party are searched.
  std::vector<Bytes> hidden;
  std::optional<Role> hidden_owner;
};

struct Finding {
  std::size_t entry = 0;
  std::string what;
};

std::vector<Finding> scan_for_leaks(const std::vector<TranscriptEntry>& log,
                                    const SensitiveValues& values);

// Flags messages on a (from, to, kind) route the protocol never uses. In
// particular the coordinator may only receive EncGradParts, EncLoss and
// Abort.
std::vector<Finding> check_routing(const std::vector<TranscriptEntry>& log);

bool route_allowed(Role from, Role to, MessageKind kind);

}  // namespace vflr::protocol

#endif  // VFLR_PROTOCOL_TRANSCRIPT_HPP_

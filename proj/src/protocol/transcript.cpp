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

#include "vflr/protocol/transcript.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <string_view>
#include <unordered_set>

namespace vflr::protocol {

void Transcript::record(TranscriptEntry e) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(e));
}

std::vector<TranscriptEntry> Transcript::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t Transcript::ciphertexts(const std::string& tag,
                                    std::size_t epoch) const {
  std::lock_guard lock(mu_);
  std::size_t total = 0;
  for (const auto& e : entries_) {
    if (!tag.empty() && e.tag != tag) continue;
    if (epoch != 0 && e.epoch != epoch) continue;
    total += e.ciphertexts;
  }
  return total;
}

std::size_t Transcript::bytes() const {
  std::lock_guard lock(mu_);
  std::size_t total = 0;
  for (const auto& e : entries_) total += kFrameHeader + e.payload.size();
  return total;
}

namespace {

std::uint64_t be_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

bool contains(const Bytes& hay, const std::uint8_t* needle, std::size_t n) {
  if (n == 0 || hay.size() < n) return false;
  const std::boyer_moore_horspool_searcher search(needle, needle + n);
  return std::search(hay.begin(), hay.end(), search) != hay.end();
}

}  // namespace

std::vector<Finding> scan_for_leaks(const std::vector<TranscriptEntry>& log,
                                    const SensitiveValues& values) {
  std::unordered_set<std::uint64_t> words;
  for (double x : values.features) {
    if (x != 0.0) words.insert(be_bits(x));
  }
  const std::uint64_t pos = be_bits(1.0), neg = be_bits(-1.0);
  // Ids grouped by length so each payload window is one hash lookup.
  std::map<std::size_t, std::unordered_set<std::string_view>> ids;
  for (const auto& id : values.entity_ids) {
    if (id.size() >= 4) ids[id.size()].insert(id);
  }
  std::vector<Finding> out;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Bytes& p = log[i].payload;
    // Plaintext values are searched only between ciphertext spans, so a
    // random ciphertext tail followed by a zero exponent cannot pose as 1.0.
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    std::size_t at = 0;
    for (const auto& [b, e] : opaque_spans(log[i].kind, p)) {
      if (b > at) segments.emplace_back(at, b);
      at = e;
    }
    if (at < p.size()) segments.emplace_back(at, p.size());

    bool value_found = false, mask_found = false;
    std::vector<bool> id_found(ids.size());
    for (const auto& [b, e] : segments) {
      std::uint64_t window = 0;
      for (std::size_t j = b; j < e && !value_found; ++j) {
        window = (window << 8) | p[j];
        if (j < b + 7) continue;
        if (words.count(window)) {
          out.push_back({i, "feature value at offset " + std::to_string(j - 7)});
          value_found = true;
        } else if (values.labels && (window == pos || window == neg)) {
          out.push_back({i, "label value at offset " + std::to_string(j - 7)});
          value_found = true;
        }
      }
      const Bytes seg(p.begin() + b, p.begin() + e);
      // Very short masks would match by chance.
      if (!mask_found && values.mask.size() >= 16 &&
          contains(seg, values.mask.data(), values.mask.size())) {
        out.push_back({i, "mask bytes"});
        mask_found = true;
      }
      std::size_t k = 0;
      for (const auto& [len, set] : ids) {
        for (std::size_t j = b; !id_found[k] && j + len <= e; ++j) {
          const std::string_view w(reinterpret_cast<const char*>(p.data()) + j, len);
          if (set.count(w)) {
            out.push_back({i, "entity id " + std::string(w)});
            id_found[k] = true;
          }
        }
        ++k;
      }
    }
    const bool owner_only = values.hidden_owner.has_value();
    for (const auto& h : values.hidden) {
      if (owner_only && log[i].from != *values.hidden_owner) break;
      if (contains(p, h.data(), h.size())) {
        out.push_back({i, "withheld ciphertext"});
      }
    }
  }
  return out;
}

bool route_allowed(Role from, Role to, MessageKind kind) {
  using K = MessageKind;
  if (kind == K::Abort) return from != to;
  switch (from) {
    case Role::Coordinator:
      if (to == Role::ProviderA) {
        return kind == K::PublicKey || kind == K::EncMask ||
               kind == K::HoldoutInit || kind == K::ModelBroadcast;
      }
      if (to == Role::ProviderB) {
        return kind == K::PublicKey || kind == K::EncMask;
      }
      return false;
    case Role::ProviderA:
      if (to == Role::ProviderB) {
        return kind == K::HoldoutInit || kind == K::EncPartialU ||
               kind == K::ModelBroadcast;
      }
      if (to == Role::Coordinator) return kind == K::EncGradParts;
      return false;
    case Role::ProviderB:
      if (to == Role::ProviderA) return kind == K::EncWZ;
      if (to == Role::Coordinator) return kind == K::EncLoss;
      return false;
  }
  return false;
}

std::vector<Finding> check_routing(const std::vector<TranscriptEntry>& log) {
  std::vector<Finding> out;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (!route_allowed(e.from, e.to, e.kind)) {
      out.push_back({i, std::string(kind_name(e.kind)) + " from " +
                            std::string(role_name(e.from)) + " to " +
                            std::string(role_name(e.to))});
    }
  }
  return out;
}

}  // namespace vflr::protocol

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

#include "vflr/linkage/clk.hpp"

#include <sodium.h>

#include <array>
#include <bit>
#include <cctype>

#include "vflr/common/error.hpp"

namespace vflr::linkage {

void ClkConfig::validate() const {
  if (l == 0) throw ConfigError("clk length l must be positive");
  if (k == 0) throw ConfigError("clk hash count k must be at least 1");
  if (n == 0) throw ConfigError("clk n-gram size n must be at least 1");
}

Clk::Clk(std::size_t l) : l_(l), words_((l + 63) / 64, 0) {
  if (l == 0) throw RangeError("clk length must be positive");
}

bool Clk::test(std::size_t i) const {
  if (i >= l_) throw RangeError("clk bit index out of range");
  return (words_[i / 64] >> (i % 64)) & 1u;
}

void Clk::set(std::size_t i) {
  if (i >= l_) throw RangeError("clk bit index out of range");
  auto& w = words_[i / 64];
  const std::uint64_t bit = std::uint64_t{1} << (i % 64);
  if (!(w & bit)) {
    w |= bit;
    ++popcount_;
  }
}

Bytes Clk::serialize() const {
  if (l_ > UINT32_MAX) throw RangeError("clk too long to serialise");
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(l_));
  Bytes body((l_ + 7) / 8, 0);
  for (std::size_t i = 0; i < l_; ++i) {
    if (test(i)) body[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  w.raw(body);
  return std::move(w).take();
}

Clk Clk::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint32_t l = r.u32();
  if (l == 0) throw DecodeError("clk length is zero");
  auto body = r.raw((static_cast<std::size_t>(l) + 7) / 8);
  r.expect_done();
  Clk out(l);
  for (std::size_t i = 0; i < l; ++i) {
    if (body[i / 8] & (0x80u >> (i % 8))) out.set(i);
  }
  // Padding bits past l must be zero.
  for (std::size_t i = l; i < body.size() * 8; ++i) {
    if (body[i / 8] & (0x80u >> (i % 8))) {
      throw DecodeError("clk padding bits set");
    }
  }
  return out;
}

std::string Clk::to_hex() const {
  static constexpr char kHex[] = "0123456789abcdef";
  const Bytes b = serialize();
  std::string out;
  out.reserve(2 * (b.size() - 4));
  for (std::size_t i = 4; i < b.size(); ++i) {
    out.push_back(kHex[b[i] >> 4]);
    out.push_back(kHex[b[i] & 15]);
  }
  return out;
}

std::string normalize_field(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  bool pending_space = false;
  for (char c : value) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(uc)));
  }
  return out;
}

std::vector<std::string> ngrams(std::string_view value, unsigned n, char pad) {
  std::vector<std::string> out;
  if (value.empty() || n == 0) return out;
  std::string padded(n - 1, pad);
  padded.append(value);
  padded.append(n - 1, pad);
  for (std::size_t i = 0; i + n <= padded.size(); ++i) {
    out.push_back(padded.substr(i, n));
  }
  return out;
}

namespace {

using HashKey = std::array<unsigned char, crypto_generichash_KEYBYTES>;

HashKey derive_key(std::string_view secret) {
  if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  HashKey key{};
  crypto_generichash(key.data(), key.size(),
                     reinterpret_cast<const unsigned char*>(secret.data()),
                     secret.size(), nullptr, 0);
  return key;
}

std::uint64_t load_be64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

std::pair<std::uint64_t, std::uint64_t> hash_with_key(const HashKey& key,
                                                      std::string_view gram) {
  std::array<unsigned char, 16> out{};
  crypto_generichash(out.data(), out.size(),
                     reinterpret_cast<const unsigned char*>(gram.data()),
                     gram.size(), key.data(), key.size());
  return {load_be64(out.data()), load_be64(out.data() + 8)};
}

}  // namespace

// The secret is first condensed to a 32-byte BLAKE2b key.
std::pair<std::uint64_t, std::uint64_t> ngram_hashes(std::string_view secret,
                                                     std::string_view gram) {
  return hash_with_key(derive_key(secret), gram);
}

std::vector<std::size_t> bit_positions(std::uint64_t h1, std::uint64_t h2,
                                       unsigned k, std::size_t l) {
  std::vector<std::size_t> out;
  out.reserve(k);
  const unsigned __int128 base = h1 % l;
  const unsigned __int128 step = h2 % l;
  for (unsigned i = 0; i < k; ++i) {
    out.push_back(static_cast<std::size_t>((base + i * step) % l));
  }
  return out;
}

Clk build_clk(const Record& record, const ClkConfig& cfg) {
  cfg.validate();
  return build_clks(std::span<const Record>(&record, 1), cfg).front();
}

std::vector<Clk> build_clks(std::span<const Record> records,
                            const ClkConfig& cfg) {
  cfg.validate();
  const HashKey key = derive_key(cfg.secret);
  std::vector<Clk> out;
  out.reserve(records.size());
  for (const auto& record : records) {
    Clk clk(cfg.l);
    for (const auto& field : cfg.fields) {
      auto it = record.find(field);
      if (it == record.end()) continue;
      for (const auto& gram : ngrams(normalize_field(it->second), cfg.n,
                                     cfg.padding)) {
        const auto [h1, h2] = hash_with_key(key, gram);
        for (auto pos : bit_positions(h1, h2, cfg.k, cfg.l)) clk.set(pos);
      }
    }
    out.push_back(std::move(clk));
  }
  return out;
}

double dice(const Clk& a, const Clk& b) {
  if (a.size() != b.size()) {
    throw DimensionError("dice: clk lengths differ");
  }
  const std::size_t total = a.popcount() + b.popcount();
  if (total == 0) return 0.0;
  std::size_t common = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    common += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(total);
}

}  // namespace vflr::linkage

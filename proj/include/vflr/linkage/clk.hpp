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

#ifndef VFLR_LINKAGE_CLK_HPP_
#define VFLR_LINKAGE_CLK_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vflr/common/bytes.hpp"

namespace vflr::linkage {

struct ClkConfig {
  std::size_t l = 1024;  // filter length in bits
  unsigned k = 20;       // bit positions per n-gram
  unsigned n = 2;        // n-gram size
  char padding = '_';
  std::vector<std::string> fields;
  std::string secret;

  // Throws ConfigError.
  void validate() const;
};

// Identifier values keyed by field name.
using Record = std::map<std::string, std::string>;

// Fixed-length Bloom filter over hashed identifier n-grams.
class Clk {
 public:
  Clk() = default;
  explicit Clk(std::size_t l);

  std::size_t size() const { return l_; }
  std::size_t popcount() const { return popcount_; }
  bool test(std::size_t i) const;
  void set(std::size_t i);
  std::span<const std::uint64_t> words() const { return words_; }

  // 4-byte BE length, then ceil(l/8) bytes, MSB-first within each byte.
  Bytes serialize() const;
  static Clk deserialize(std::span<const std::uint8_t> bytes);
  std::string to_hex() const;

  friend bool operator==(const Clk& a, const Clk& b) {
    return a.l_ == b.l_ && a.words_ == b.words_;
  }

 private:
  std::size_t l_ = 0;
  std::size_t popcount_ = 0;
  std::vector<std::uint64_t> words_;
};

// Lowercase, trim, collapse internal whitespace runs to one space.
std::string normalize_field(std::string_view value);

// Padded n-grams of an already normalised value; empty input gives none.
std::vector<std::string> ngrams(std::string_view value, unsigned n, char pad);

// Keyed BLAKE2b-128 of the n-gram; the two big-endian 64-bit halves.
std::pair<std::uint64_t, std::uint64_t> ngram_hashes(std::string_view secret,
                                                     std::string_view gram);

// (h1 + i*h2) mod l for i in [0, k), computed without wraparound.
std::vector<std::size_t> bit_positions(std::uint64_t h1, std::uint64_t h2,
                                       unsigned k, std::size_t l);

Clk build_clk(const Record& record, const ClkConfig& cfg);
std::vector<Clk> build_clks(std::span<const Record> records,
                            const ClkConfig& cfg);

// 2|a & b| / (|a| + |b|); 0 when both are empty. Throws DimensionError on
// length mismatch.
double dice(const Clk& a, const Clk& b);

}  // namespace vflr::linkage

#endif  // VFLR_LINKAGE_CLK_HPP_

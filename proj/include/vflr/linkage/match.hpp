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

#ifndef VFLR_LINKAGE_MATCH_HPP_
#define VFLR_LINKAGE_MATCH_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vflr/common/random.hpp"
#include "vflr/encoding/float_codec.hpp"
#include "vflr/linkage/clk.hpp"

namespace vflr::linkage {

struct ScoredPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double score = 0.0;
};

// Output of entity resolution. Position i aligns row sigma[i] of A with row
// tau[i] of B; mask[i] says whether they were matched.
struct Linkage {
  std::vector<std::size_t> sigma;
  std::vector<std::size_t> tau;
  std::vector<std::uint8_t> mask;
  std::vector<double> scores;

  std::size_t size() const { return mask.size(); }
  std::size_t matches() const;
};

// Row-major |a| x |b| Dice scores, computed in parallel row chunks.
std::vector<double> score_matrix(std::span<const Clk> a, std::span<const Clk> b,
                                 unsigned threads = 0);

// Greedy selection over pairs scoring >= threshold, in order of descending
// score, then ascending a, then ascending b.
std::vector<ScoredPair> greedy_match(std::span<const double> scores,
                                     std::size_t rows, std::size_t cols,
                                     double threshold);

// Common length is min(|a|, |b|). All matched rows are kept; the longer side
// contributes a random subset of its unmatched rows, unmatched rows are
// paired at random and the positions shuffled, all from `seed`.
Linkage match(std::span<const Clk> a, std::span<const Clk> b, double threshold,
              std::uint64_t seed, unsigned threads = 0);

// Mask bits are encoded at exponent 0.
std::vector<encoding::EncryptedNumber> encrypt_mask(
    std::span<const std::uint8_t> mask, const encoding::FloatCodec& codec,
    RandomSource& rng = system_random());
// Faster variant for the key owner.
std::vector<encoding::EncryptedNumber> encrypt_mask(
    std::span<const std::uint8_t> mask, const encoding::FloatCodec& codec,
    const he::PrivateKey& sk, RandomSource& rng = system_random());

}  // namespace vflr::linkage

#endif  // VFLR_LINKAGE_MATCH_HPP_

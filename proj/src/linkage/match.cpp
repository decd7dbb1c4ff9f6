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

#include "vflr/linkage/match.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <thread>

#include "vflr/common/error.hpp"

namespace vflr::linkage {

std::size_t Linkage::matches() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

std::vector<double> score_matrix(std::span<const Clk> a, std::span<const Clk> b,
                                 unsigned threads) {
  std::vector<double> out(a.size() * b.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(a.size(), 1)));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        out[i * b.size() + j] = dice(a[i], b[j]);
      }
    }
  };
  if (threads <= 1) {
    work(0, a.size());
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (a.size() + threads - 1) / threads;
  for (std::size_t begin = 0; begin < a.size(); begin += chunk) {
    pool.emplace_back(work, begin, std::min(a.size(), begin + chunk));
  }
  for (auto& t : pool) t.join();
  return out;
}

std::vector<ScoredPair> greedy_match(std::span<const double> scores,
                                     std::size_t rows, std::size_t cols,
                                     double threshold) {
  if (scores.size() != rows * cols) {
    throw DimensionError("greedy_match: score matrix has wrong size");
  }
  std::vector<ScoredPair> candidates;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double s = scores[i * cols + j];
      if (s >= threshold) candidates.push_back({i, j, s});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const ScoredPair& x, const ScoredPair& y) {
              if (x.score != y.score) return x.score > y.score;
              if (x.a != y.a) return x.a < y.a;
              return x.b < y.b;
            });
  std::vector<bool> used_a(rows, false), used_b(cols, false);
  std::vector<ScoredPair> out;
  for (const auto& c : candidates) {
    if (used_a[c.a] || used_b[c.b]) continue;
    used_a[c.a] = used_b[c.b] = true;
    out.push_back(c);
  }
  return out;
}

Linkage match(std::span<const Clk> a, std::span<const Clk> b, double threshold,
              std::uint64_t seed, unsigned threads) {
  if (a.empty() || b.empty()) throw RangeError("match: empty input");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("match threshold must lie in [0, 1]");
  }
  const auto scores = score_matrix(a, b, threads);
  const auto pairs = greedy_match(scores, a.size(), b.size(), threshold);

  std::mt19937_64 gen(seed);
  std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
  for (const auto& p : pairs) used_a[p.a] = used_b[p.b] = true;
  std::vector<std::size_t> free_a, free_b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!used_a[i]) free_a.push_back(i);
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!used_b[j]) free_b.push_back(j);
  }
  const std::size_t n = std::min(a.size(), b.size());
  const std::size_t fill = n - pairs.size();
  std::shuffle(free_a.begin(), free_a.end(), gen);
  std::shuffle(free_b.begin(), free_b.end(), gen);
  free_a.resize(fill);
  free_b.resize(fill);

  struct Row {
    std::size_t a, b;
    std::uint8_t m;
  };
  std::vector<Row> rows;
  rows.reserve(n);
  for (const auto& p : pairs) rows.push_back({p.a, p.b, 1});
  for (std::size_t i = 0; i < fill; ++i) rows.push_back({free_a[i], free_b[i], 0});
  std::shuffle(rows.begin(), rows.end(), gen);

  Linkage out;
  out.sigma.reserve(n);
  out.tau.reserve(n);
  out.mask.reserve(n);
  out.scores.reserve(n);
  for (const auto& r : rows) {
    out.sigma.push_back(r.a);
    out.tau.push_back(r.b);
    out.mask.push_back(r.m);
    out.scores.push_back(scores[r.a * b.size() + r.b]);
  }
  return out;
}

std::vector<encoding::EncryptedNumber> encrypt_mask(
    std::span<const std::uint8_t> mask, const encoding::FloatCodec& codec,
    RandomSource& rng) {
  std::vector<encoding::EncryptedNumber> out;
  out.reserve(mask.size());
  for (auto bit : mask) {
    if (bit > 1) throw RangeError("mask entries must be 0 or 1");
    out.push_back(codec.encrypt(codec.encode_integer(bit), rng));
  }
  return out;
}

std::vector<encoding::EncryptedNumber> encrypt_mask(
    std::span<const std::uint8_t> mask, const encoding::FloatCodec& codec,
    const he::PrivateKey& sk, RandomSource& rng) {
  if (!(sk.public_key() == codec.public_key())) {
    throw KeyMismatchError("encrypt_mask: private key does not match codec");
  }
  std::vector<encoding::EncryptedNumber> out;
  out.reserve(mask.size());
  for (auto bit : mask) {
    if (bit > 1) throw RangeError("mask entries must be 0 or 1");
    out.push_back({sk.encrypt(bit, rng), 0});
  }
  return out;
}

}  // namespace vflr::linkage

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

#ifndef VFLR_PROTOCOL_AUDIT_HPP_
#define VFLR_PROTOCOL_AUDIT_HPP_

#include <cstddef>
#include <cstdint>
#include <span>

namespace vflr::protocol {

// P[X <= k] for X hypergeometric: `draws` items taken without replacement
// from `population` items of which `successes` are marked. Exact rational
// arithmetic, rounded once to double.
double hypergeometric_cdf(std::uint64_t population, std::uint64_t successes,
                          std::uint64_t draws, std::uint64_t k);

struct BatchAudit {
  std::size_t rows = 0;
  std::size_t matches = 0;
  std::size_t batch = 0;
  double p_at_most_one = 0.0;  // P[a random batch holds <= 1 true match]
};

BatchAudit audit_batch_leakage(std::span<const std::uint8_t> mask,
                               std::size_t batch);

// Ciphertexts exchanged for gradients in one epoch: <u'> and <w> per row,
// then z to A and (z', z) to C per batch.
std::size_t gradient_ciphertexts_per_epoch(std::size_t train_rows,
                                           std::size_t batches,
                                           std::size_t d_a, std::size_t d_b);
// h masked products, one <u'> and the returned loss.
std::size_t loss_ciphertexts_per_epoch(std::size_t holdout);

}  // namespace vflr::protocol

#endif  // VFLR_PROTOCOL_AUDIT_HPP_

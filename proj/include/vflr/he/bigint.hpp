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

#ifndef VFLR_HE_BIGINT_HPP_
#define VFLR_HE_BIGINT_HPP_

#include <gmpxx.h>

#include <cstdint>
#include <span>

#include "vflr/common/bytes.hpp"
#include "vflr/common/random.hpp"

namespace vflr::he {

using BigInt = mpz_class;

// Magnitude as big-endian unsigned bytes, no leading zeros (zero -> empty).
Bytes to_bytes(const BigInt& x);
BigInt from_bytes(std::span<const std::uint8_t> bytes);

// Uniform integer in [0, bound) by rejection sampling.
BigInt uniform_below(const BigInt& bound, RandomSource& rng);

// Uniform integer with exactly `bits` bits (top bit set).
BigInt uniform_bits(unsigned bits, RandomSource& rng);

inline BigInt from_u64(std::uint64_t v) {
  BigInt out;
  mpz_import(out.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
  return out;
}

}  // namespace vflr::he

#endif  // VFLR_HE_BIGINT_HPP_

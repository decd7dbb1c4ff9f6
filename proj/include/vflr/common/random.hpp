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

#ifndef VFLR_COMMON_RANDOM_HPP_
#define VFLR_COMMON_RANDOM_HPP_

#include <cstdint>
#include <span>

namespace vflr {

// Source of uniformly random bytes. Implementations must be safe to call
// from several threads at once.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;
};

// Operating-system CSPRNG (libsodium randombytes).
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

// Process-wide SystemRandom instance.
RandomSource& system_random();

// Uniform 64-bit value from the CSPRNG.
std::uint64_t random_u64(RandomSource& rng);

}  // namespace vflr

#endif  // VFLR_COMMON_RANDOM_HPP_

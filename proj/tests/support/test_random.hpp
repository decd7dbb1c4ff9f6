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

#ifndef VFLR_TESTS_SUPPORT_TEST_RANDOM_HPP_
#define VFLR_TESTS_SUPPORT_TEST_RANDOM_HPP_

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>

#include "vflr/common/random.hpp"

namespace vflr::testing {

// Reproducible byte stream for tests. Not cryptographically secure.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) : gen_(seed) {}
  void fill(std::span<std::uint8_t> out) override {
    for (auto& b : out) b = static_cast<std::uint8_t>(gen_());
  }

 private:
  std::mt19937_64 gen_;
};

// Emits the big-endian encoding of 1 for every request, which forces the
// Paillier nonce r to 1.
class UnitNonce final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override {
    std::fill(out.begin(), out.end(), 0);
    if (!out.empty()) out.back() = 1;
  }
};

}  // namespace vflr::testing

#endif  // VFLR_TESTS_SUPPORT_TEST_RANDOM_HPP_

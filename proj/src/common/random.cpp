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

#include "vflr/common/random.hpp"

#include <sodium.h>

#include <array>
#include <stdexcept>

namespace vflr {
namespace {

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

}  // namespace

void SystemRandom::fill(std::span<std::uint8_t> out) {
  ensure_sodium();
  randombytes_buf(out.data(), out.size());
}

RandomSource& system_random() {
  static SystemRandom instance;
  return instance;
}

std::uint64_t random_u64(RandomSource& rng) {
  std::array<std::uint8_t, 8> buf{};
  rng.fill(buf);
  std::uint64_t v = 0;
  for (auto b : buf) v = (v << 8) | b;
  return v;
}

}  // namespace vflr

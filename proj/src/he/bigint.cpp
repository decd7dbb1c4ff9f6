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

#include "vflr/he/bigint.hpp"

#include <vector>

namespace vflr::he {

Bytes to_bytes(const BigInt& x) {
  if (sgn(x) == 0) return {};
  const std::size_t size = (mpz_sizeinbase(x.get_mpz_t(), 2) + 7) / 8;
  Bytes out(size);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, x.get_mpz_t());
  out.resize(written);
  return out;
}

BigInt from_bytes(std::span<const std::uint8_t> bytes) {
  BigInt out;
  if (!bytes.empty()) {
    mpz_import(out.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return out;
}

BigInt uniform_bits(unsigned bits, RandomSource& rng) {
  const std::size_t nbytes = (bits + 7) / 8;
  Bytes buf(nbytes);
  rng.fill(buf);
  const unsigned excess = static_cast<unsigned>(nbytes * 8 - bits);
  buf[0] &= static_cast<std::uint8_t>(0xFFu >> excess);
  buf[0] |= static_cast<std::uint8_t>(0x80u >> excess);
  return from_bytes(buf);
}

BigInt uniform_below(const BigInt& bound, RandomSource& rng) {
  const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const std::size_t nbytes = (bits + 7) / 8;
  const unsigned excess = static_cast<unsigned>(nbytes * 8 - bits);
  Bytes buf(nbytes);
  for (;;) {
    rng.fill(buf);
    buf[0] &= static_cast<std::uint8_t>(0xFFu >> excess);
    BigInt candidate = from_bytes(buf);
    if (candidate < bound) return candidate;
  }
}

}  // namespace vflr::he

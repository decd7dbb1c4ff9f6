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

#ifndef VFLR_ENCODING_FLOAT_CODEC_HPP_
#define VFLR_ENCODING_FLOAT_CODEC_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "vflr/common/bytes.hpp"
#include "vflr/common/random.hpp"
#include "vflr/he/paillier.hpp"

namespace vflr::encoding {

using he::BigInt;

inline constexpr unsigned kDefaultBase = 16;
// Fraction bits of a binary64 significand.
inline constexpr int kFractionBits = 52;

// s * base^exponent, with s read as a signed residue mod m.
struct EncodedNumber {
  BigInt significand;
  std::int64_t exponent = 0;
};

// The exponent stays in the clear.
struct EncryptedNumber {
  he::Ciphertext significand;
  std::int64_t exponent = 0;
};

// Public bracket [2^lower_log2, 2^upper_log2) that contains |q|.
struct LeakageRange {
  std::int64_t lower_log2 = 0;
  std::int64_t upper_log2 = 0;
  double lower() const;
  double upper() const;
};

class FloatCodec {
 public:
  // base must be a power of two no larger than 2^16.
  explicit FloatCodec(he::PublicKey pk, unsigned base = kDefaultBase);

  const he::PublicKey& public_key() const { return pk_; }
  unsigned base() const { return base_; }
  unsigned log2_base() const { return log2_base_; }

  // Exact: significand * base^exponent == q. Throws EncodeError for NaN,
  // infinities and subnormals.
  EncodedNumber encode(double q) const;
  // Integer at exponent 0. Used for mask bits so the exponent carries nothing.
  EncodedNumber encode_integer(std::int64_t v) const;

  // Correctly rounded to binary64. Throws OverflowError if the significand
  // sits in the reserved middle third of Z_m or the value exceeds binary64.
  double decode(const EncodedNumber& x) const;
  // Signed significand; throws OverflowError inside the reserved band.
  BigInt signed_significand(const BigInt& s) const;

  EncryptedNumber encrypt(double q, RandomSource& rng = system_random()) const;
  EncryptedNumber encrypt(const EncodedNumber& x,
                          RandomSource& rng = system_random()) const;
  EncodedNumber decrypt_encoded(const he::PrivateKey& sk,
                                const EncryptedNumber& a) const;
  double decrypt(const he::PrivateKey& sk, const EncryptedNumber& a) const;

  // Aligns to the smaller exponent. Throws OverflowError if base^gap >= m.
  EncryptedNumber add(const EncryptedNumber& a, const EncryptedNumber& b) const;
  // Exponents add; the result is re-randomised.
  EncryptedNumber mul_plain(const EncryptedNumber& a, const EncodedNumber& k,
                            RandomSource& rng = system_random()) const;
  EncryptedNumber mul_plain(const EncryptedNumber& a, double k,
                            RandomSource& rng = system_random()) const;
  // sum_i a_i * k_i with one re-randomisation. Zero plaintext terms are
  // skipped; an all-zero product is a fresh encryption of 0.
  EncryptedNumber dot(std::span<const EncryptedNumber> a,
                      std::span<const EncodedNumber> k,
                      RandomSource& rng = system_random()) const;
  EncryptedNumber dot(std::span<const EncryptedNumber> a,
                      std::span<const double> k,
                      RandomSource& rng = system_random()) const;

  // Same value at a lower exponent.
  EncryptedNumber lower_exponent(const EncryptedNumber& a,
                                 std::int64_t exponent) const;

  // `factors` is the number of fresh encodings multiplied into `a`.
  LeakageRange leakage_range(const EncryptedNumber& a,
                             unsigned factors = 1) const;
  LeakageRange leakage_range(std::int64_t exponent, unsigned factors = 1) const;

  void write(ByteWriter& w, const EncryptedNumber& a) const;
  EncryptedNumber read(ByteReader& r) const;
  void write(ByteWriter& w, std::span<const EncryptedNumber> v) const;
  std::vector<EncryptedNumber> read_vector(ByteReader& r) const;

 private:
  BigInt scale_factor(std::int64_t gap) const;

  he::PublicKey pk_;
  unsigned base_;
  unsigned log2_base_;
  BigInt positive_limit_;  // m / 3
  BigInt negative_start_;  // m - m / 3
};

std::vector<EncryptedNumber> encrypt_vector(const FloatCodec& codec,
                                            std::span<const double> v,
                                            RandomSource& rng = system_random());
std::vector<double> decrypt_vector(const FloatCodec& codec,
                                   const he::PrivateKey& sk,
                                   std::span<const EncryptedNumber> v);

}  // namespace vflr::encoding

#endif  // VFLR_ENCODING_FLOAT_CODEC_HPP_

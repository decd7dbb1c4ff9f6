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

#include "vflr/encoding/float_codec.hpp"

#include <mpfr.h>

#include <bit>
#include <cmath>
#include <string>

#include "vflr/common/error.hpp"

namespace vflr::encoding {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  ~Mpfr() { mpfr_clear(v_); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  mpfr_ptr get() { return v_; }

 private:
  mpfr_t v_;
};

}  // namespace

double LeakageRange::lower() const {
  return std::ldexp(1.0, static_cast<int>(lower_log2));
}
double LeakageRange::upper() const {
  return std::ldexp(1.0, static_cast<int>(upper_log2));
}

FloatCodec::FloatCodec(he::PublicKey pk, unsigned base)
    : pk_(std::move(pk)), base_(base) {
  if (base < 2 || !std::has_single_bit(base) || base > (1u << 16)) {
    throw ConfigError("encoding base must be a power of two in [2, 2^16]");
  }
  log2_base_ = static_cast<unsigned>(std::countr_zero(base));
  positive_limit_ = pk_.modulus() / 3;
  negative_start_ = pk_.modulus() - positive_limit_;
  BigInt largest = 1;
  largest <<= (kFractionBits + 1 + log2_base_);
  if (largest >= positive_limit_) {
    throw ConfigError("modulus too small for base " + std::to_string(base));
  }
}

EncodedNumber FloatCodec::encode(double q) const {
  switch (std::fpclassify(q)) {
    case FP_ZERO:
      return {0, 0};
    case FP_NORMAL:
      break;
    case FP_SUBNORMAL:
      throw EncodeError("subnormal values are not encodable");
    default:
      throw EncodeError("non-finite values are not encodable");
  }
  int e2 = 0;
  const double frac = std::frexp(std::fabs(q), &e2);
  const auto mant = static_cast<std::uint64_t>(std::ldexp(frac, kFractionBits + 1));
  // |q| = mant * 2^(e2 - 53)
  const std::int64_t bin_exp = e2 - (kFractionBits + 1);
  const std::int64_t exponent = floor_div(bin_exp, log2_base_);
  const auto shift =
      static_cast<mp_bitcnt_t>(bin_exp - exponent * log2_base_);
  BigInt s = he::from_u64(mant);
  s <<= shift;
  if (q < 0) s = pk_.modulus() - s;
  return {std::move(s), exponent};
}

EncodedNumber FloatCodec::encode_integer(std::int64_t v) const {
  const std::uint64_t mag = v < 0 ? 0 - static_cast<std::uint64_t>(v)
                                  : static_cast<std::uint64_t>(v);
  BigInt s = he::from_u64(mag);
  if (s >= positive_limit_) throw EncodeError("integer exceeds encodable range");
  if (v < 0) s = pk_.modulus() - s;
  return {std::move(s), 0};
}

BigInt FloatCodec::signed_significand(const BigInt& s) const {
  if (sgn(s) < 0 || s >= pk_.modulus()) {
    throw DecodeError("significand outside [0, m)");
  }
  if (s < positive_limit_) return s;
  if (s >= negative_start_) return s - pk_.modulus();
  throw OverflowError("significand in reserved overflow band");
}

double FloatCodec::decode(const EncodedNumber& x) const {
  BigInt s = signed_significand(x.significand);
  if (sgn(s) == 0) return 0.0;
  const auto bits = static_cast<mpfr_prec_t>(mpz_sizeinbase(s.get_mpz_t(), 2));
  Mpfr v(std::max<mpfr_prec_t>(bits, MPFR_PREC_MIN));
  mpfr_set_z(v.get(), s.get_mpz_t(), MPFR_RNDN);  // exact
  const std::int64_t shift = x.exponent * static_cast<std::int64_t>(log2_base_);
  // Values this far out are outside binary64 regardless of the significand.
  if (shift > 1 << 20) throw OverflowError("value exceeds binary64 range");
  if (shift < -(1 << 20)) return s > 0 ? 0.0 : -0.0;
  mpfr_mul_2si(v.get(), v.get(), static_cast<long>(shift), MPFR_RNDN);
  const double out = mpfr_get_d(v.get(), MPFR_RNDN);
  if (!std::isfinite(out)) throw OverflowError("value exceeds binary64 range");
  return out;
}

EncryptedNumber FloatCodec::encrypt(double q, RandomSource& rng) const {
  return encrypt(encode(q), rng);
}

EncryptedNumber FloatCodec::encrypt(const EncodedNumber& x,
                                    RandomSource& rng) const {
  return {pk_.encrypt(x.significand, rng), x.exponent};
}

EncodedNumber FloatCodec::decrypt_encoded(const he::PrivateKey& sk,
                                          const EncryptedNumber& a) const {
  return {sk.decrypt(a.significand), a.exponent};
}

double FloatCodec::decrypt(const he::PrivateKey& sk,
                           const EncryptedNumber& a) const {
  return decode(decrypt_encoded(sk, a));
}

BigInt FloatCodec::scale_factor(std::int64_t gap) const {
  if (gap < 0) throw RangeError("negative exponent gap");
  // m is odd with L bits, so 2^bits < m exactly when bits < L.
  const auto modulus_bits = mpz_sizeinbase(pk_.modulus().get_mpz_t(), 2);
  if (static_cast<std::uint64_t>(gap) >= modulus_bits ||
      static_cast<std::uint64_t>(gap) * log2_base_ >= modulus_bits) {
    throw OverflowError("base^gap exceeds the modulus (gap " +
                        std::to_string(gap) + ")");
  }
  BigInt f = 1;
  f <<= static_cast<mp_bitcnt_t>(gap * log2_base_);
  return f;
}

EncryptedNumber FloatCodec::lower_exponent(const EncryptedNumber& a,
                                           std::int64_t exponent) const {
  if (exponent > a.exponent) {
    throw RangeError("lower_exponent: target exceeds current exponent");
  }
  if (exponent == a.exponent) return a;
  return {pk_.raw_mul(a.significand, scale_factor(a.exponent - exponent)),
          exponent};
}

EncryptedNumber FloatCodec::add(const EncryptedNumber& a,
                                const EncryptedNumber& b) const {
  const std::int64_t e = std::min(a.exponent, b.exponent);
  const auto x = lower_exponent(a, e);
  const auto y = lower_exponent(b, e);
  return {pk_.add(x.significand, y.significand), e};
}

EncryptedNumber FloatCodec::mul_plain(const EncryptedNumber& a,
                                      const EncodedNumber& k,
                                      RandomSource& rng) const {
  return {pk_.mul_plain(a.significand, k.significand, rng),
          a.exponent + k.exponent};
}

EncryptedNumber FloatCodec::mul_plain(const EncryptedNumber& a, double k,
                                      RandomSource& rng) const {
  return mul_plain(a, encode(k), rng);
}

EncryptedNumber FloatCodec::dot(std::span<const EncryptedNumber> a,
                                std::span<const EncodedNumber> k,
                                RandomSource& rng) const {
  if (a.size() != k.size()) {
    throw DimensionError("dot: length mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(k.size()) + ")");
  }
  bool any = false;
  std::int64_t e = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (sgn(k[i].significand) == 0) continue;
    const std::int64_t ei = a[i].exponent + k[i].exponent;
    e = any ? std::min(e, ei) : ei;
    any = true;
  }
  if (!any) return {pk_.encrypt(0, rng), 0};

  // Alignment happens on the plaintext side, so each term costs one
  // exponentiation.
  std::vector<he::Ciphertext> cts;
  std::vector<BigInt> scalars;
  cts.reserve(a.size());
  scalars.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (sgn(k[i].significand) == 0) {
      pk_.validate(a[i].significand);
      continue;
    }
    const std::int64_t gap = a[i].exponent + k[i].exponent - e;
    BigInt s = k[i].significand;
    if (gap > 0) s = (s * scale_factor(gap)) % pk_.modulus();
    cts.push_back(a[i].significand);
    scalars.push_back(std::move(s));
  }
  return {pk_.dot(cts, scalars, rng), e};
}

EncryptedNumber FloatCodec::dot(std::span<const EncryptedNumber> a,
                                std::span<const double> k,
                                RandomSource& rng) const {
  std::vector<EncodedNumber> enc;
  enc.reserve(k.size());
  for (double v : k) enc.push_back(encode(v));
  return dot(a, enc, rng);
}

LeakageRange FloatCodec::leakage_range(std::int64_t exponent,
                                       unsigned factors) const {
  if (factors == 0) throw RangeError("leakage_range needs at least one factor");
  const std::int64_t f = factors;
  const std::int64_t lower = exponent * log2_base_ + f * kFractionBits;
  return {lower, lower + f * log2_base_};
}

LeakageRange FloatCodec::leakage_range(const EncryptedNumber& a,
                                       unsigned factors) const {
  return leakage_range(a.exponent, factors);
}

void FloatCodec::write(ByteWriter& w, const EncryptedNumber& a) const {
  pk_.validate(a.significand);
  w.prefixed(he::to_bytes(a.significand.value()));
  w.i64(a.exponent);
}

EncryptedNumber FloatCodec::read(ByteReader& r) const {
  he::Ciphertext c(he::from_bytes(r.prefixed()), pk_.key_id());
  pk_.validate(c);
  const std::int64_t e = r.i64();
  return {std::move(c), e};
}

void FloatCodec::write(ByteWriter& w,
                       std::span<const EncryptedNumber> v) const {
  if (v.size() > UINT32_MAX) throw RangeError("vector too long to serialise");
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& a : v) write(w, a);
}

std::vector<EncryptedNumber> FloatCodec::read_vector(ByteReader& r) const {
  const std::uint32_t n = r.u32();
  // Each element needs at least 4 + 8 bytes; reject absurd counts early.
  if (static_cast<std::size_t>(n) * 12 > r.remaining()) {
    throw DecodeError("vector count exceeds payload");
  }
  std::vector<EncryptedNumber> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(read(r));
  return out;
}

std::vector<EncryptedNumber> encrypt_vector(const FloatCodec& codec,
                                            std::span<const double> v,
                                            RandomSource& rng) {
  std::vector<EncryptedNumber> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(codec.encrypt(x, rng));
  return out;
}

std::vector<double> decrypt_vector(const FloatCodec& codec,
                                   const he::PrivateKey& sk,
                                   std::span<const EncryptedNumber> v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& a : v) out.push_back(codec.decrypt(sk, a));
  return out;
}

}  // namespace vflr::encoding

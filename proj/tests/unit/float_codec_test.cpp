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

#include <gtest/gtest.h>
#include <mpfr.h>

#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "support/test_random.hpp"
#include "vflr/common/error.hpp"

namespace vflr::encoding {
namespace {

using vflr::testing::SeededRandom;

const he::KeyPair& key1024() {
  static const he::KeyPair kp = [] {
    SeededRandom rng(11);
    return he::generate_keypair({.bits = 1024}, rng);
  }();
  return kp;
}

const he::KeyPair& key256() {
  static const he::KeyPair kp = [] {
    SeededRandom rng(12);
    return he::generate_keypair({.bits = 256, .allow_insecure = true}, rng);
  }();
  return kp;
}

double random_normal_double(std::mt19937_64& gen) {
  for (;;) {
    const double q = std::bit_cast<double>(gen());
    if (std::isnormal(q)) return q;
  }
}

TEST(Encode, ZeroIsZeroZero) {
  FloatCodec codec(key256().public_key);
  const auto z = codec.encode(0.0);
  EXPECT_EQ(z.significand, 0);
  EXPECT_EQ(z.exponent, 0);
  EXPECT_EQ(codec.decode({0, 0}), 0.0);
  EXPECT_EQ(codec.encode(-0.0).significand, 0);
}

TEST(Encode, RejectsNonFiniteAndSubnormal) {
  FloatCodec codec(key256().public_key);
  EXPECT_THROW(codec.encode(std::numeric_limits<double>::quiet_NaN()),
               EncodeError);
  EXPECT_THROW(codec.encode(std::numeric_limits<double>::infinity()),
               EncodeError);
  EXPECT_THROW(codec.encode(std::numeric_limits<double>::denorm_min()),
               EncodeError);
}

TEST(Encode, BaseMustBePowerOfTwo) {
  EXPECT_THROW(FloatCodec(key256().public_key, 10), ConfigError);
  EXPECT_THROW(FloatCodec(key256().public_key, 1), ConfigError);
  EXPECT_NO_THROW(FloatCodec(key256().public_key, 2));
}

TEST(Encode, SignSymmetry) {
  FloatCodec codec(key256().public_key);
  const auto pos = codec.encode(3.75);
  const auto neg = codec.encode(-3.75);
  EXPECT_EQ(neg.exponent, pos.exponent);
  EXPECT_EQ(neg.significand, codec.public_key().modulus() - pos.significand);
}

// Independent search: the exponent that makes q * 16^-e an integer in
// [2^52, 2^52 * 16), the unique normalised full-precision significand.
TEST(Encode, OneAtBaseSixteenMatchesSearch) {
  FloatCodec codec(key256().public_key, 16);
  const auto enc = codec.encode(1.0);
  int found = 0;
  std::int64_t best = 0;
  for (int e = 10; e >= -40; --e) {
    const double s = std::ldexp(1.0, -4 * e);
    if (s == std::floor(s) && s >= 0x1p52 && s < 0x1p56) {
      ++found;
      best = e;
    }
  }
  ASSERT_EQ(found, 1);
  EXPECT_EQ(enc.exponent, best);
  EXPECT_EQ(enc.significand, BigInt(1) << 52);
  EXPECT_EQ(codec.decode(enc), 1.0);
}

TEST(Decode, SignificandAboveHalfIsNegative) {
  FloatCodec codec(key256().public_key);
  const auto enc = codec.encode(-2.5);
  EXPECT_GT(enc.significand, codec.public_key().modulus() / 2);
  const BigInt mag = codec.public_key().modulus() - enc.significand;
  EXPECT_EQ(codec.decode(enc),
            -mag.get_d() * std::ldexp(1.0, 4 * static_cast<int>(enc.exponent)));
  EXPECT_EQ(codec.decode(enc), -2.5);
}

TEST(Decode, ReservedBandOverflows) {
  FloatCodec codec(key256().public_key);
  const BigInt half = codec.public_key().modulus() / 2;
  EXPECT_THROW(codec.decode({half, 0}), OverflowError);
  EXPECT_THROW(codec.decode({codec.public_key().modulus() / 3 + 1, 0}),
               OverflowError);
}

TEST(Encode, RoundTripRandomBitPatterns) {
  FloatCodec codec(key256().public_key);
  std::mt19937_64 gen(13);
  for (int i = 0; i < 100000; ++i) {
    const double q = random_normal_double(gen);
    const auto enc = codec.encode(q);
    ASSERT_EQ(std::bit_cast<std::uint64_t>(codec.decode(enc)),
              std::bit_cast<std::uint64_t>(q));
  }
}

TEST(Encode, ExtremeNormals) {
  FloatCodec codec(key256().public_key);
  for (double q : {std::numeric_limits<double>::max(),
                   std::numeric_limits<double>::min(),
                   -std::numeric_limits<double>::max(),
                   -std::numeric_limits<double>::min(), 1.0, -1.0}) {
    EXPECT_EQ(codec.decode(codec.encode(q)), q);
  }
}

TEST(Encrypted, AddExamples) {
  const auto& [pk, sk] = key1024();
  FloatCodec codec(pk);
  EXPECT_EQ(codec.decrypt(sk, codec.add(codec.encrypt(1.5), codec.encrypt(2.5))),
            4.0);
  const auto x = codec.encrypt(0.3);
  const auto z = codec.add(x, codec.encrypt(0.0));
  EXPECT_EQ(codec.decrypt(sk, z), 0.3);
  EXPECT_EQ(z.exponent, std::min<std::int64_t>(x.exponent, 0));
}

TEST(Encrypted, AddMatchesExactSum) {
  const auto& [pk, sk] = key256();
  FloatCodec codec(pk);
  SeededRandom rng(14);
  std::mt19937_64 gen(15);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-40, 40);
  mpfr_t a, b, sum;
  mpfr_inits2(4096, a, b, sum, static_cast<mpfr_ptr>(nullptr));
  for (int i = 0; i < 1000; ++i) {
    const double x = std::ldexp(mant(gen), ex(gen));
    const double y = std::ldexp(mant(gen), ex(gen));
    const auto ex_ = codec.encrypt(x, rng);
    const auto ey = codec.encrypt(y, rng);
    const auto r = codec.add(ex_, ey);
    ASSERT_EQ(r.exponent, std::min(ex_.exponent, ey.exponent));
    mpfr_set_d(a, x, MPFR_RNDN);
    mpfr_set_d(b, y, MPFR_RNDN);
    mpfr_add(sum, a, b, MPFR_RNDN);  // exact at this precision
    ASSERT_EQ(codec.decrypt(sk, r), mpfr_get_d(sum, MPFR_RNDN))
        << x << " + " << y;
  }
  mpfr_clears(a, b, sum, static_cast<mpfr_ptr>(nullptr));
}

TEST(Encrypted, AddGapBeyondModulusOverflows) {
  const auto& [pk, sk] = key256();
  FloatCodec codec(pk);
  const auto big = codec.encrypt(1e200);
  const auto small = codec.encrypt(1e-200);
  EXPECT_THROW(codec.add(big, small), OverflowError);
}

TEST(Encrypted, MulPlainExamples) {
  const auto& [pk, sk] = key1024();
  FloatCodec codec(pk);
  const auto two = codec.encrypt(2.0);
  const auto three = codec.encode(3.0);
  const auto r = codec.mul_plain(two, three);
  EXPECT_EQ(codec.decrypt(sk, r), 6.0);
  EXPECT_EQ(r.exponent, two.exponent + three.exponent);
  const auto x = codec.encrypt(-0.7);
  EXPECT_EQ(codec.decrypt(sk, codec.mul_plain(x, 1.0)), -0.7);
}

TEST(Encrypted, DotMatchesExactOracle) {
  const auto& [pk, sk] = key256();
  FloatCodec codec(pk);
  SeededRandom rng(16);
  std::mt19937_64 gen(17);
  std::normal_distribution<double> nd;
  mpfr_t acc, t;
  mpfr_inits2(2048, acc, t, static_cast<mpfr_ptr>(nullptr));
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> a(6), k(6);
    for (auto& v : a) v = nd(gen);
    for (auto& v : k) v = nd(gen);
    k[2] = 0.0;
    const auto ea = encrypt_vector(codec, a, rng);
    const auto r = codec.dot(ea, k, rng);
    mpfr_set_zero(acc, 1);
    for (int i = 0; i < 6; ++i) {
      mpfr_set_d(t, a[i], MPFR_RNDN);
      mpfr_mul_d(t, t, k[i], MPFR_RNDN);
      mpfr_add(acc, acc, t, MPFR_RNDN);
    }
    EXPECT_EQ(codec.decrypt(sk, r), mpfr_get_d(acc, MPFR_RNDN));
  }
  mpfr_clears(acc, t, static_cast<mpfr_ptr>(nullptr));
  std::vector<double> zeros(3, 0.0), vals = {1.0, 2.0, 3.0};
  const auto ev = encrypt_vector(codec, vals, rng);
  EXPECT_EQ(codec.decrypt(sk, codec.dot(ev, zeros, rng)), 0.0);
  std::vector<double> two(2, 1.0);
  EXPECT_THROW(codec.dot(ev, two, rng), DimensionError);
}

TEST(Encrypted, ExponentsArePublicFunctions) {
  const auto& [pk, sk] = key256();
  FloatCodec codec(pk);
  std::mt19937_64 gen(18);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 50; ++i) {
    const auto a = codec.encrypt(u(gen));
    const auto b = codec.encrypt(u(gen));
    const auto k = codec.encode(u(gen));
    EXPECT_EQ(codec.add(a, b).exponent, std::min(a.exponent, b.exponent));
    EXPECT_EQ(codec.mul_plain(a, k).exponent, a.exponent + k.exponent);
  }
}

TEST(Encrypted, NineteenFactorChainAtBaseTwo) {
  const auto& [pk, sk] = key1024();
  FloatCodec codec(pk, 2);
  SeededRandom rng(19);
  std::mt19937_64 gen(20);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int chain = 0; chain < 3; ++chain) {
    std::vector<double> f(19);
    for (auto& v : f) v = (gen() & 1 ? -1 : 1) * u(gen);
    auto acc = codec.encrypt(f[0], rng);
    mpfr_t exact, t;
    mpfr_inits2(4096, exact, t, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_d(exact, f[0], MPFR_RNDN);
    for (int i = 1; i < 19; ++i) {
      acc = codec.mul_plain(acc, f[i], rng);
      mpfr_mul_d(exact, exact, f[i], MPFR_RNDN);
    }
    EXPECT_EQ(codec.decrypt(sk, acc), mpfr_get_d(exact, MPFR_RNDN));
    mpfr_clears(exact, t, static_cast<mpfr_ptr>(nullptr));
  }
}

TEST(Leakage, FormulaAndContainment) {
  const auto& [pk, sk] = key256();
  FloatCodec codec(pk, 16);
  const auto r0 = codec.leakage_range(0);
  EXPECT_EQ(r0.lower_log2, 52);
  EXPECT_EQ(r0.upper_log2, 56);
  std::mt19937_64 gen(21);
  for (int i = 0; i < 2000; ++i) {
    double q = random_normal_double(gen);
    if (std::fabs(q) > 1e300 || std::fabs(q) < 1e-290) continue;
    const auto enc = codec.encrypt(q);
    const auto r = codec.leakage_range(enc);
    ASSERT_LE(r.lower(), std::fabs(q));
    ASSERT_LT(std::fabs(q), r.upper());
    EXPECT_EQ(r.upper_log2 - r.lower_log2, 4);
  }
}

TEST(Leakage, OneMultiplicationWidensToBaseSquared) {
  const auto& [pk, sk] = key256();
  FloatCodec codec(pk, 16);
  std::mt19937_64 gen(22);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 200; ++i) {
    const double x = u(gen), y = u(gen);
    const auto p = codec.mul_plain(codec.encrypt(x), y);
    const auto r = codec.leakage_range(p, 2);
    EXPECT_EQ(r.upper_log2 - r.lower_log2, 8);
    const double v = std::fabs(codec.decrypt(sk, p));
    EXPECT_LE(r.lower(), v);
    EXPECT_LT(v, r.upper());
  }
}

TEST(Wire, EncryptedNumberRoundTrip) {
  const auto& [pk, sk] = key256();
  FloatCodec codec(pk);
  std::vector<double> vals = {1.0, -2.5, 0.0, 1e-30};
  const auto enc = encrypt_vector(codec, vals);
  ByteWriter w;
  codec.write(w, enc);
  const Bytes bytes = std::move(w).take();
  EXPECT_EQ(bytes[0], 0);
  EXPECT_EQ(bytes[3], 4);
  ByteReader r(bytes);
  const auto back = codec.read_vector(r);
  r.expect_done();
  EXPECT_EQ(decrypt_vector(codec, sk, back), vals);
  // Exponent is the trailing 8-byte two's-complement field.
  ByteWriter one;
  codec.write(one, enc[0]);
  const Bytes b1 = std::move(one).take();
  ByteReader r1({b1.data() + b1.size() - 8, 8});
  EXPECT_EQ(r1.i64(), enc[0].exponent);
}

}  // namespace
}  // namespace vflr::encoding

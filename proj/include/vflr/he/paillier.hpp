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

#ifndef VFLR_HE_PAILLIER_HPP_
#define VFLR_HE_PAILLIER_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "vflr/common/bytes.hpp"
#include "vflr/common/random.hpp"
#include "vflr/he/bigint.hpp"

namespace vflr::he {

inline constexpr unsigned kMinSecureKeyBits = 1024;
inline constexpr unsigned kMinInsecureKeyBits = 64;

// An element of Z*_{m^2}. Carries the id of the key it was produced under so
// that mixing keys is caught instead of silently producing garbage.
class Ciphertext {
 public:
  Ciphertext() = default;
  Ciphertext(BigInt value, std::uint64_t key_id)
      : value_(std::move(value)), key_id_(key_id) {}

  const BigInt& value() const { return value_; }
  std::uint64_t key_id() const { return key_id_; }

  friend bool operator==(const Ciphertext& a, const Ciphertext& b) {
    return a.key_id_ == b.key_id_ && a.value_ == b.value_;
  }

 private:
  BigInt value_;
  std::uint64_t key_id_ = 0;
};

// Paillier public key with generator fixed to m + 1. Copies share the
// immutable key material.
class PublicKey {
 public:
  // Rejects even moduli and moduli below kMinInsecureKeyBits.
  explicit PublicKey(BigInt modulus);

  const BigInt& modulus() const;
  const BigInt& modulus_squared() const;
  BigInt generator() const { return modulus() + 1; }
  unsigned bits() const;
  std::uint64_t key_id() const;
  bool insecure() const { return bits() < kMinSecureKeyBits; }

  // x must lie in [0, m).
  Ciphertext encrypt(const BigInt& x, RandomSource& rng = system_random()) const;

  // (a + b) mod m. Deterministic: no fresh randomness is mixed in.
  Ciphertext add(const Ciphertext& a, const Ciphertext& b) const;

  // (x * k) mod m, re-randomised with a fresh Enc(0) so the multiplier cannot
  // be confirmed by recomputing a^k.
  Ciphertext mul_plain(const Ciphertext& a, const BigInt& k,
                       RandomSource& rng = system_random()) const;

  // a^k without re-randomisation. Only for intermediate values that are
  // combined and re-randomised before they leave the party.
  Ciphertext raw_mul(const Ciphertext& a, const BigInt& k) const;

  // Multiplies in a fresh encryption of zero.
  Ciphertext rerandomize(const Ciphertext& a,
                         RandomSource& rng = system_random()) const;

  // r^m mod m^2 for uniform invertible r.
  BigInt random_mask(RandomSource& rng = system_random()) const;

  // Encryption of <enc, plain> mod m, re-randomised once at the end.
  Ciphertext dot(std::span<const Ciphertext> enc, std::span<const BigInt> plain,
                 RandomSource& rng = system_random()) const;

  // Throws KeyMismatchError / DecodeError if `a` does not belong to this key.
  void validate(const Ciphertext& a) const;

  // Length-prefixed big-endian modulus.
  Bytes serialize() const;
  static PublicKey deserialize(std::span<const std::uint8_t> bytes);

  Bytes serialize(const Ciphertext& a) const;
  Ciphertext deserialize_ciphertext(std::span<const std::uint8_t> bytes) const;

  friend bool operator==(const PublicKey& a, const PublicKey& b) {
    return a.modulus() == b.modulus();
  }

 private:
  struct Data;
  std::shared_ptr<const Data> d_;
};

class PrivateKey {
 public:
  // p and q must be distinct primes with p*q == pub.modulus().
  PrivateKey(PublicKey pub, BigInt p, BigInt q);

  const PublicKey& public_key() const;
  const BigInt& p() const;
  const BigInt& q() const;

  // CRT decryption. Throws DecodeError for values outside Z*_{m^2}.
  BigInt decrypt(const Ciphertext& a) const;

  // Same distribution as PublicKey::encrypt, with r^m computed modulo p^2 and
  // q^2 separately.
  Ciphertext encrypt(const BigInt& x, RandomSource& rng = system_random()) const;

  Bytes serialize() const;
  static PrivateKey deserialize(std::span<const std::uint8_t> bytes);

 private:
  struct Data;
  std::shared_ptr<const Data> d_;
};

struct KeyPair {
  PublicKey public_key;
  PrivateKey private_key;
};

struct KeygenOptions {
  unsigned bits = kMinSecureKeyBits;
  // Required for bits < kMinSecureKeyBits; such keys print a warning.
  bool allow_insecure = false;
  int miller_rabin_rounds = 40;
  // Candidate draws per prime before giving up; 0 picks 64 * bits.
  unsigned max_attempts = 0;
};

KeyPair generate_keypair(const KeygenOptions& options = {},
                         RandomSource& rng = system_random());

// Row-major grid used for the matrix extension of the scheme.
template <typename T>
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  T& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

using PlainMatrix = Grid<BigInt>;
using EncryptedMatrix = Grid<Ciphertext>;

EncryptedMatrix encrypt_matrix(const PublicKey& pk, const PlainMatrix& plain,
                               RandomSource& rng = system_random());
PlainMatrix decrypt_matrix(const PrivateKey& sk, const EncryptedMatrix& enc);

// A * Enc(B) and Enc(A) * B. Entries are re-randomised.
EncryptedMatrix multiply(const PublicKey& pk, const PlainMatrix& a,
                         const EncryptedMatrix& b,
                         RandomSource& rng = system_random());
EncryptedMatrix multiply(const PublicKey& pk, const EncryptedMatrix& a,
                         const PlainMatrix& b,
                         RandomSource& rng = system_random());

}  // namespace vflr::he

#endif  // VFLR_HE_PAILLIER_HPP_

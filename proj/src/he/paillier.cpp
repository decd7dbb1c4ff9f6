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

#include "vflr/he/paillier.hpp"

#include <iostream>
#include <string>

#include "vflr/common/error.hpp"

namespace vflr::he {
namespace {

std::uint64_t fingerprint(const BigInt& modulus) {
  // FNV-1a over the big-endian magnitude.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : to_bytes(modulus)) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h == 0 ? 1 : h;
}

BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  BigInt out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

BigInt invert(const BigInt& a, const BigInt& mod) {
  BigInt out;
  if (mpz_invert(out.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0) {
    throw DecodeError("value is not invertible");
  }
  return out;
}

unsigned bit_length(const BigInt& x) {
  return static_cast<unsigned>(mpz_sizeinbase(x.get_mpz_t(), 2));
}

BigInt random_unit(const BigInt& modulus, RandomSource& rng) {
  for (;;) {
    BigInt r = uniform_below(modulus, rng);
    if (sgn(r) == 0) continue;
    BigInt g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), modulus.get_mpz_t());
    if (g == 1) return r;
  }
}

}  // namespace

struct PublicKey::Data {
  BigInt n;
  BigInt n_sq;
  unsigned bits = 0;
  std::uint64_t id = 0;
};

PublicKey::PublicKey(BigInt modulus) {
  if (sgn(modulus) <= 0 || mpz_even_p(modulus.get_mpz_t())) {
    throw RangeError("Paillier modulus must be a positive odd integer");
  }
  auto d = std::make_shared<Data>();
  d->bits = bit_length(modulus);
  if (d->bits < kMinInsecureKeyBits) {
    throw RangeError("Paillier modulus below " +
                     std::to_string(kMinInsecureKeyBits) + " bits");
  }
  d->n_sq = modulus * modulus;
  d->id = fingerprint(modulus);
  d->n = std::move(modulus);
  d_ = std::move(d);
}

const BigInt& PublicKey::modulus() const { return d_->n; }
const BigInt& PublicKey::modulus_squared() const { return d_->n_sq; }
unsigned PublicKey::bits() const { return d_->bits; }
std::uint64_t PublicKey::key_id() const { return d_->id; }

BigInt PublicKey::random_mask(RandomSource& rng) const {
  return powm(random_unit(d_->n, rng), d_->n, d_->n_sq);
}

Ciphertext PublicKey::encrypt(const BigInt& x, RandomSource& rng) const {
  if (sgn(x) < 0 || x >= d_->n) {
    throw RangeError("plaintext outside [0, m)");
  }
  // g^x = (1 + m)^x = 1 + x*m (mod m^2).
  BigInt c = (1 + x * d_->n) % d_->n_sq;
  c = (c * random_mask(rng)) % d_->n_sq;
  return {std::move(c), d_->id};
}

void PublicKey::validate(const Ciphertext& a) const {
  if (a.key_id() != d_->id) {
    throw KeyMismatchError("ciphertext was produced under a different key");
  }
  if (sgn(a.value()) <= 0 || a.value() >= d_->n_sq) {
    throw DecodeError("ciphertext outside (0, m^2)");
  }
}

Ciphertext PublicKey::add(const Ciphertext& a, const Ciphertext& b) const {
  validate(a);
  validate(b);
  return {(a.value() * b.value()) % d_->n_sq, d_->id};
}

Ciphertext PublicKey::raw_mul(const Ciphertext& a, const BigInt& k) const {
  validate(a);
  if (sgn(k) < 0 || k >= d_->n) {
    throw RangeError("scalar outside [0, m)");
  }
  // Scalars in the upper half are negative numbers in disguise; raising the
  // inverse to m - k keeps the exponent short.
  const BigInt half = d_->n / 2;
  if (k > half) {
    BigInt neg_k = d_->n - k;
    return {powm(invert(a.value(), d_->n_sq), neg_k, d_->n_sq), d_->id};
  }
  return {powm(a.value(), k, d_->n_sq), d_->id};
}

Ciphertext PublicKey::rerandomize(const Ciphertext& a, RandomSource& rng) const {
  validate(a);
  return {(a.value() * random_mask(rng)) % d_->n_sq, d_->id};
}

Ciphertext PublicKey::mul_plain(const Ciphertext& a, const BigInt& k,
                                RandomSource& rng) const {
  return rerandomize(raw_mul(a, k), rng);
}

Ciphertext PublicKey::dot(std::span<const Ciphertext> enc,
                          std::span<const BigInt> plain,
                          RandomSource& rng) const {
  if (enc.size() != plain.size()) {
    throw DimensionError("dot: length mismatch (" + std::to_string(enc.size()) +
                         " vs " + std::to_string(plain.size()) + ")");
  }
  BigInt acc = 1;
  for (std::size_t i = 0; i < enc.size(); ++i) {
    if (sgn(plain[i]) == 0) {
      validate(enc[i]);
      continue;
    }
    acc = (acc * raw_mul(enc[i], plain[i]).value()) % d_->n_sq;
  }
  return rerandomize(Ciphertext(std::move(acc), d_->id), rng);
}

Bytes PublicKey::serialize() const {
  ByteWriter w;
  w.prefixed(to_bytes(d_->n));
  return std::move(w).take();
}

PublicKey PublicKey::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  PublicKey pk(from_bytes(r.prefixed()));
  r.expect_done();
  return pk;
}

Bytes PublicKey::serialize(const Ciphertext& a) const {
  validate(a);
  ByteWriter w;
  w.prefixed(to_bytes(a.value()));
  return std::move(w).take();
}

Ciphertext PublicKey::deserialize_ciphertext(
    std::span<const std::uint8_t> bytes) const {
  ByteReader r(bytes);
  Ciphertext c(from_bytes(r.prefixed()), d_->id);
  r.expect_done();
  validate(c);
  return c;
}

// ---------------------------------------------------------------------------

struct PrivateKey::Data {
  PublicKey pub;
  BigInt p, q;
  BigInt p_sq, q_sq;
  BigInt p_minus_1, q_minus_1;
  BigInt h_p, h_q;      // L(g^{p-1} mod p^2)^{-1} mod p, likewise for q
  BigInt q_inv_p;       // q^{-1} mod p
  BigInt n_mod_phi_p2;  // m mod p(p-1), exponent for r^m mod p^2
  BigInt n_mod_phi_q2;
  BigInt p_sq_inv_q_sq;  // (p^2)^{-1} mod q^2

  explicit Data(PublicKey pk) : pub(std::move(pk)) {}
};

namespace {

BigInt l_function(const BigInt& u, const BigInt& p) { return (u - 1) / p; }

}  // namespace

PrivateKey::PrivateKey(PublicKey pub, BigInt p, BigInt q) {
  if (p == q) throw KeyGenerationError("p and q must differ");
  if (p * q != pub.modulus()) {
    throw KeyGenerationError("p*q does not match the public modulus");
  }
  if (mpz_probab_prime_p(p.get_mpz_t(), 25) == 0 ||
      mpz_probab_prime_p(q.get_mpz_t(), 25) == 0) {
    throw KeyGenerationError("private key factors must be prime");
  }
  if (p > q) std::swap(p, q);
  auto d = std::make_shared<Data>(std::move(pub));
  d->p = std::move(p);
  d->q = std::move(q);
  d->p_sq = d->p * d->p;
  d->q_sq = d->q * d->q;
  d->p_minus_1 = d->p - 1;
  d->q_minus_1 = d->q - 1;
  const BigInt g = d->pub.generator();
  d->h_p = invert(l_function(powm(g, d->p_minus_1, d->p_sq), d->p), d->p);
  d->h_q = invert(l_function(powm(g, d->q_minus_1, d->q_sq), d->q), d->q);
  d->q_inv_p = invert(d->q, d->p);
  d->n_mod_phi_p2 = d->pub.modulus() % (d->p * d->p_minus_1);
  d->n_mod_phi_q2 = d->pub.modulus() % (d->q * d->q_minus_1);
  d->p_sq_inv_q_sq = invert(d->p_sq, d->q_sq);
  d_ = std::move(d);
}

const PublicKey& PrivateKey::public_key() const { return d_->pub; }
const BigInt& PrivateKey::p() const { return d_->p; }
const BigInt& PrivateKey::q() const { return d_->q; }

BigInt PrivateKey::decrypt(const Ciphertext& a) const {
  d_->pub.validate(a);
  BigInt g;
  mpz_gcd(g.get_mpz_t(), a.value().get_mpz_t(),
          d_->pub.modulus().get_mpz_t());
  if (g != 1) throw DecodeError("ciphertext is not a unit mod m^2");
  const BigInt mp =
      (l_function(powm(a.value() % d_->p_sq, d_->p_minus_1, d_->p_sq), d_->p) *
       d_->h_p) %
      d_->p;
  const BigInt mq =
      (l_function(powm(a.value() % d_->q_sq, d_->q_minus_1, d_->q_sq), d_->q) *
       d_->h_q) %
      d_->q;
  BigInt diff = ((mp - mq) * d_->q_inv_p) % d_->p;
  if (sgn(diff) < 0) diff += d_->p;
  return mq + d_->q * diff;
}

Ciphertext PrivateKey::encrypt(const BigInt& x, RandomSource& rng) const {
  const BigInt& n = d_->pub.modulus();
  const BigInt& n_sq = d_->pub.modulus_squared();
  if (sgn(x) < 0 || x >= n) throw RangeError("plaintext outside [0, m)");
  BigInt r;
  for (;;) {
    r = uniform_below(n, rng);
    BigInt g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t());
    if (sgn(r) != 0 && g == 1) break;
  }
  const BigInt rp = powm(r % d_->p_sq, d_->n_mod_phi_p2, d_->p_sq);
  const BigInt rq = powm(r % d_->q_sq, d_->n_mod_phi_q2, d_->q_sq);
  // CRT recombination modulo p^2 q^2.
  BigInt t = ((rq - rp) * d_->p_sq_inv_q_sq) % d_->q_sq;
  if (sgn(t) < 0) t += d_->q_sq;
  const BigInt rn = rp + d_->p_sq * t;
  BigInt c = ((1 + x * n) * rn) % n_sq;
  return {std::move(c), d_->pub.key_id()};
}

Bytes PrivateKey::serialize() const {
  ByteWriter w;
  w.prefixed(to_bytes(d_->p));
  w.prefixed(to_bytes(d_->q));
  return std::move(w).take();
}

PrivateKey PrivateKey::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  BigInt p = from_bytes(r.prefixed());
  BigInt q = from_bytes(r.prefixed());
  r.expect_done();
  PublicKey pub(p * q);
  return PrivateKey(std::move(pub), std::move(p), std::move(q));
}

// ---------------------------------------------------------------------------

namespace {

BigInt random_prime(unsigned bits, const KeygenOptions& opt, RandomSource& rng) {
  const unsigned attempts = opt.max_attempts ? opt.max_attempts : 64 * bits;
  for (unsigned i = 0; i < attempts; ++i) {
    BigInt c = uniform_bits(bits, rng);
    // Second-highest bit set so the product has exactly 2*bits bits.
    mpz_setbit(c.get_mpz_t(), bits - 2);
    mpz_setbit(c.get_mpz_t(), 0);
    if (mpz_probab_prime_p(c.get_mpz_t(), opt.miller_rabin_rounds) > 0) {
      return c;
    }
  }
  throw KeyGenerationError("prime generation failed after " +
                           std::to_string(attempts) + " candidates");
}

}  // namespace

KeyPair generate_keypair(const KeygenOptions& options, RandomSource& rng) {
  const unsigned bits = options.bits;
  if (bits % 2 != 0) throw RangeError("key size must be even");
  if (bits < kMinInsecureKeyBits) {
    throw RangeError("key size below " + std::to_string(kMinInsecureKeyBits) +
                     " bits");
  }
  if (bits < kMinSecureKeyBits) {
    if (!options.allow_insecure) {
      throw RangeError("key size below " + std::to_string(kMinSecureKeyBits) +
                       " bits requires allow_insecure");
    }
    std::cerr << "WARNING: generating INSECURE " << bits
              << "-bit Paillier key (testing only)\n";
  }
  for (int round = 0; round < 16; ++round) {
    BigInt p = random_prime(bits / 2, options, rng);
    BigInt q = random_prime(bits / 2, options, rng);
    if (p == q) continue;
    BigInt n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != bits) continue;
    PublicKey pub(n);
    PrivateKey priv(pub, std::move(p), std::move(q));
    return {std::move(pub), std::move(priv)};
  }
  throw KeyGenerationError("could not produce a modulus of the requested size");
}

// ---------------------------------------------------------------------------

EncryptedMatrix encrypt_matrix(const PublicKey& pk, const PlainMatrix& plain,
                               RandomSource& rng) {
  EncryptedMatrix out(plain.rows, plain.cols);
  for (std::size_t i = 0; i < plain.data.size(); ++i) {
    out.data[i] = pk.encrypt(plain.data[i], rng);
  }
  return out;
}

PlainMatrix decrypt_matrix(const PrivateKey& sk, const EncryptedMatrix& enc) {
  PlainMatrix out(enc.rows, enc.cols);
  for (std::size_t i = 0; i < enc.data.size(); ++i) {
    out.data[i] = sk.decrypt(enc.data[i]);
  }
  return out;
}

EncryptedMatrix multiply(const PublicKey& pk, const PlainMatrix& a,
                         const EncryptedMatrix& b, RandomSource& rng) {
  if (a.cols != b.rows) throw DimensionError("matrix product: inner dims differ");
  EncryptedMatrix out(a.rows, b.cols);
  std::vector<Ciphertext> column(b.rows);
  std::vector<BigInt> row(a.cols);
  for (std::size_t j = 0; j < b.cols; ++j) {
    for (std::size_t k = 0; k < b.rows; ++k) column[k] = b.at(k, j);
    for (std::size_t i = 0; i < a.rows; ++i) {
      for (std::size_t k = 0; k < a.cols; ++k) row[k] = a.at(i, k);
      out.at(i, j) = pk.dot(column, row, rng);
    }
  }
  return out;
}

EncryptedMatrix multiply(const PublicKey& pk, const EncryptedMatrix& a,
                         const PlainMatrix& b, RandomSource& rng) {
  if (a.cols != b.rows) throw DimensionError("matrix product: inner dims differ");
  EncryptedMatrix out(a.rows, b.cols);
  std::vector<Ciphertext> row(a.cols);
  std::vector<BigInt> column(b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) row[k] = a.at(i, k);
    for (std::size_t j = 0; j < b.cols; ++j) {
      for (std::size_t k = 0; k < b.rows; ++k) column[k] = b.at(k, j);
      out.at(i, j) = pk.dot(row, column, rng);
    }
  }
  return out;
}

}  // namespace vflr::he

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

#include "vflr/protocol/audit.hpp"

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>

#include "vflr/common/error.hpp"

namespace vflr::protocol {

namespace {

mpz_class binom(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  mpz_class out;
  mpz_bin_uiui(out.get_mpz_t(), n, k);
  return out;
}

}  // namespace

double hypergeometric_cdf(std::uint64_t population, std::uint64_t successes,
                          std::uint64_t draws, std::uint64_t k) {
  if (successes > population || draws > population) {
    throw RangeError("hypergeometric parameters exceed population");
  }
  mpz_class num = 0;
  const std::uint64_t top = std::min({k, successes, draws});
  for (std::uint64_t x = 0; x <= top; ++x) {
    num += binom(successes, x) * binom(population - successes, draws - x);
  }
  mpq_class p(num, binom(population, draws));
  p.canonicalize();
  mpfr_t r;
  mpfr_init2(r, 53);
  mpfr_set_q(r, p.get_mpq_t(), MPFR_RNDN);
  const double out = mpfr_get_d(r, MPFR_RNDN);
  mpfr_clear(r);
  return out;
}

BatchAudit audit_batch_leakage(std::span<const std::uint8_t> mask,
                               std::size_t batch) {
  BatchAudit a;
  a.rows = mask.size();
  a.batch = batch;
  for (auto m : mask) {
    if (m > 1) throw RangeError("mask entries must be 0 or 1");
    a.matches += m;
  }
  if (batch > a.rows) throw ConfigError("batch larger than the row count");
  a.p_at_most_one = hypergeometric_cdf(a.rows, a.matches, batch, 1);
  return a;
}

std::size_t gradient_ciphertexts_per_epoch(std::size_t train_rows,
                                           std::size_t batches,
                                           std::size_t d_a, std::size_t d_b) {
  return 2 * train_rows + batches * (d_a + 2 * d_b);
}

std::size_t loss_ciphertexts_per_epoch(std::size_t holdout) {
  return holdout + 2;
}

}  // namespace vflr::protocol

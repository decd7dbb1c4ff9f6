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

#include <gtest/gtest.h>
#include <sodium.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "support/test_random.hpp"
#include "vflr/common/error.hpp"
#include "vflr/linkage/clk.hpp"
#include "vflr/linkage/match.hpp"

namespace vflr::linkage {
namespace {

ClkConfig name_config(std::size_t l = 1024, unsigned k = 20) {
  ClkConfig cfg;
  cfg.l = l;
  cfg.k = k;
  cfg.fields = {"first", "last", "dob"};
  cfg.secret = "shared secret";
  return cfg;
}

// Second implementation of the hash schedule, straight from libsodium.
std::set<std::size_t> oracle_bits(const std::vector<std::string>& grams,
                                  const std::string& secret, unsigned k,
                                  std::size_t l) {
  EXPECT_GE(sodium_init(), 0);
  unsigned char key[32];
  crypto_generichash(key, 32,
                     reinterpret_cast<const unsigned char*>(secret.data()),
                     secret.size(), nullptr, 0);
  std::set<std::size_t> bits;
  for (const auto& g : grams) {
    unsigned char h[16];
    crypto_generichash(h, 16, reinterpret_cast<const unsigned char*>(g.data()),
                       g.size(), key, 32);
    unsigned __int128 h1 = 0, h2 = 0;
    for (int i = 0; i < 8; ++i) h1 = (h1 << 8) | h[i];
    for (int i = 8; i < 16; ++i) h2 = (h2 << 8) | h[i];
    for (unsigned i = 0; i < k; ++i) {
      // h1 + i*h2 fits in 128 bits for i < 2^63.
      bits.insert(static_cast<std::size_t>((h1 + i * h2) % l));
    }
  }
  return bits;
}

TEST(Clk, NormalisationAndNgrams) {
  EXPECT_EQ(normalize_field("  Anna   Maria \t"), "anna maria");
  EXPECT_EQ(normalize_field("   "), "");
  EXPECT_EQ(ngrams("anna", 2, '_'),
            (std::vector<std::string>{"_a", "an", "nn", "na", "a_"}));
  EXPECT_TRUE(ngrams("", 2, '_').empty());
  EXPECT_EQ(ngrams("ab", 1, '_'), (std::vector<std::string>{"a", "b"}));
}

TEST(Clk, AnnaMatchesHashScheduleOracle) {
  ClkConfig cfg;
  cfg.l = 64;
  cfg.k = 2;
  cfg.fields = {"name"};
  cfg.secret = "s3cret";
  const Clk clk = build_clk({{"name", "anna"}}, cfg);
  const auto expect =
      oracle_bits({"_a", "an", "nn", "na", "a_"}, cfg.secret, 2, 64);
  EXPECT_LE(clk.popcount(), 10u);
  EXPECT_EQ(clk.popcount(), expect.size());
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_EQ(clk.test(i), expect.count(i) == 1) << "bit " << i;
  }
}

TEST(Clk, DeterministicAndEmpty) {
  const auto cfg = name_config();
  const Record r = {{"first", "John"}, {"last", "Smith"}, {"dob", "1970-01-01"}};
  EXPECT_EQ(build_clk(r, cfg), build_clk(r, cfg));
  EXPECT_EQ(build_clk({}, cfg).popcount(), 0u);
  EXPECT_EQ(build_clk({{"first", ""}, {"last", " "}}, cfg).popcount(), 0u);
  auto other = cfg;
  other.secret = "different";
  EXPECT_NE(build_clk(r, cfg), build_clk(r, other));
}

TEST(Clk, ConfigValidation) {
  auto cfg = name_config();
  cfg.k = 0;
  EXPECT_THROW(build_clk({}, cfg), ConfigError);
  cfg = name_config();
  cfg.l = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Clk, SerializationIsMsbFirst) {
  Clk clk(12);
  clk.set(0);
  clk.set(9);
  const Bytes b = clk.serialize();
  ASSERT_EQ(b.size(), 6u);
  EXPECT_EQ(b[3], 12);
  EXPECT_EQ(b[4], 0x80);
  EXPECT_EQ(b[5], 0x40);
  EXPECT_EQ(Clk::deserialize(b), clk);
  Bytes bad = b;
  bad[5] |= 0x01;
  EXPECT_THROW(Clk::deserialize(bad), DecodeError);
  bad.pop_back();
  EXPECT_THROW(Clk::deserialize(bad), DecodeError);
}

TEST(Dice, Examples) {
  Clk a(16), b(16);
  a.set(1);
  a.set(2);
  b.set(2);
  b.set(3);
  EXPECT_DOUBLE_EQ(dice(a, b), 0.5);
  EXPECT_DOUBLE_EQ(dice(a, a), 1.0);
  Clk c(16);
  c.set(7);
  EXPECT_DOUBLE_EQ(dice(a, c), 0.0);
  EXPECT_DOUBLE_EQ(dice(Clk(16), Clk(16)), 0.0);
  EXPECT_DOUBLE_EQ(dice(a, b), dice(b, a));
  EXPECT_THROW(dice(a, Clk(8)), DimensionError);
}

TEST(DiceProperty, SingleSubstitutionBound) {
  const auto cfg = name_config();
  std::mt19937_64 gen(31);
  const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  auto word = [&](int len) {
    std::string s;
    for (int i = 0; i < len; ++i) s.push_back(letters[gen() % 26]);
    return s;
  };
  for (int trial = 0; trial < 500; ++trial) {
    Record r = {{"first", word(3 + gen() % 6)},
                {"last", word(4 + gen() % 8)},
                {"dob", "19" + std::to_string(10 + gen() % 90)}};
    Record t = r;
    auto& f = t[gen() % 2 ? "first" : "last"];
    f[gen() % f.size()] = letters[gen() % 26];
    const Clk x = build_clk(r, cfg), y = build_clk(t, cfg);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < cfg.l; ++i) diff += x.test(i) != y.test(i);
    ASSERT_LE(diff, 2u * cfg.n * cfg.k);
    ASSERT_GE(dice(x, y),
              1.0 - 2.0 * cfg.n * cfg.k / static_cast<double>(x.popcount()));
  }
}

std::vector<Record> people(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::vector<std::string> first = {"anna", "bob", "carla", "dieter",
                                          "eva", "farid", "gina", "hugo"};
  std::vector<Record> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({{"first", first[gen() % first.size()]},
                   {"last", "name" + std::to_string(i * 7919 % 10007)},
                   {"dob", std::to_string(1950 + gen() % 50)}});
  }
  return out;
}

TEST(Match, IdenticalInputsMatchFully) {
  const auto cfg = name_config();
  const auto clks = build_clks(people(30, 1), cfg);
  const auto link = match(clks, clks, 0.9, 5);
  ASSERT_EQ(link.size(), 30u);
  for (std::size_t i = 0; i < link.size(); ++i) {
    EXPECT_EQ(link.mask[i], 1);
    EXPECT_EQ(link.sigma[i], link.tau[i]);
    EXPECT_DOUBLE_EQ(link.scores[i], 1.0);
  }
}

TEST(Match, ThresholdOneWithDistinctRecords) {
  const auto cfg = name_config();
  const auto a = build_clks(people(10, 2), cfg);
  auto pb = people(10, 2);
  for (auto& r : pb) r["last"] += "x";
  const auto b = build_clks(pb, cfg);
  const auto link = match(a, b, 1.0, 5);
  EXPECT_EQ(link.matches(), 0u);
}

// Exhaustive search over all 3! pairings confirms the greedy choice.
TEST(Match, ThreeByThreeAgreesWithBruteForce) {
  const auto cfg = name_config();
  const std::vector<Record> ra = {{{"first", "anna"}, {"last", "meier"}},
                                  {{"first", "otto"}, {"last", "krause"}},
                                  {{"first", "lena"}, {"last", "vogel"}}};
  const std::vector<Record> rb = {{{"first", "paul"}, {"last", "wagner"}},
                                  {{"first", "anna"}, {"last", "meier"}},
                                  {{"first", "ida"}, {"last", "schulz"}}};
  const auto a = build_clks(ra, cfg), b = build_clks(rb, cfg);
  const auto link = match(a, b, 0.8, 3);
  ASSERT_EQ(link.matches(), 1u);
  for (std::size_t i = 0; i < 3; ++i) {
    if (link.mask[i]) {
      EXPECT_EQ(link.sigma[i], 0u);
      EXPECT_EQ(link.tau[i], 1u);
    }
  }
  std::vector<std::size_t> perm = {0, 1, 2};
  double best = -1;
  std::vector<std::size_t> best_perm;
  do {
    double total = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double s = dice(a[i], b[perm[i]]);
      if (s >= 0.8) total += s;
    }
    if (total > best) {
      best = total;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_EQ(best_perm[0], 1u);
}

TEST(MatchProperty, GreedyConsistencyAndEquationOne) {
  const auto cfg = name_config(256, 10);
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t na = 5 + gen() % 20, nb = 5 + gen() % 20;
    const auto a = build_clks(people(na, gen()), cfg);
    const auto b = build_clks(people(nb, gen()), cfg);
    const double tau = 0.3 + 0.5 * (gen() % 100) / 100.0;
    const auto scores = score_matrix(a, b, 2);
    const auto pairs = greedy_match(scores, na, nb, tau);
    std::set<std::size_t> ua, ub;
    for (const auto& p : pairs) {
      EXPECT_TRUE(ua.insert(p.a).second);
      EXPECT_TRUE(ub.insert(p.b).second);
      EXPECT_GE(p.score, tau);
    }
    // Maximality: no remaining free pair clears the threshold.
    for (std::size_t i = 0; i < na; ++i) {
      for (std::size_t j = 0; j < nb; ++j) {
        if (!ua.count(i) && !ub.count(j)) EXPECT_LT(scores[i * nb + j], tau);
      }
    }
    const auto link = match(a, b, tau, gen());
    ASSERT_EQ(link.size(), std::min(na, nb));
    std::set<std::pair<std::size_t, std::size_t>> selected;
    for (const auto& p : pairs) selected.insert({p.a, p.b});
    std::set<std::size_t> sa, sb;
    for (std::size_t i = 0; i < link.size(); ++i) {
      EXPECT_TRUE(sa.insert(link.sigma[i]).second);
      EXPECT_TRUE(sb.insert(link.tau[i]).second);
      EXPECT_LT(link.sigma[i], na);
      EXPECT_LT(link.tau[i], nb);
      EXPECT_EQ(link.mask[i] == 1,
                selected.count({link.sigma[i], link.tau[i]}) == 1);
      if (link.mask[i]) EXPECT_GE(link.scores[i], tau);
    }
    EXPECT_EQ(link.matches(), pairs.size());
  }
}

TEST(MatchProperty, SeedShufflesOnlyUnmatchedRows) {
  const auto cfg = name_config(256, 10);
  auto pa = people(40, 7);
  auto pb = pa;
  for (std::size_t i = 20; i < 40; ++i) pb[i]["last"] = "zz" + std::to_string(i);
  const auto a = build_clks(pa, cfg), b = build_clks(pb, cfg);
  const auto l1 = match(a, b, 0.95, 1);
  const auto l2 = match(a, b, 0.95, 2);
  auto matched = [](const Linkage& l) {
    std::set<std::pair<std::size_t, std::size_t>> s;
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (l.mask[i]) s.insert({l.sigma[i], l.tau[i]});
    }
    return s;
  };
  EXPECT_EQ(matched(l1), matched(l2));
  EXPECT_NE(l1.sigma, l2.sigma);
  EXPECT_EQ(match(a, b, 0.95, 1).sigma, l1.sigma);
}

TEST(Match, LongerSideIsTruncatedToUnmatchedSubset) {
  const auto cfg = name_config(256, 10);
  auto pa = people(10, 9);
  auto pb = people(25, 9);  // first 10 identical to pa
  const auto a = build_clks(pa, cfg), b = build_clks(pb, cfg);
  const auto link = match(a, b, 1.0, 4);
  EXPECT_EQ(link.size(), 10u);
  EXPECT_GE(link.matches(), 1u);
  EXPECT_THROW(match(a, {}, 0.5, 1), RangeError);
  EXPECT_THROW(match(a, b, 1.5, 1), ConfigError);
}

TEST(EncryptMask, RoundTrip) {
  vflr::testing::SeededRandom rng(51);
  const auto kp = he::generate_keypair({.bits = 256, .allow_insecure = true}, rng);
  encoding::FloatCodec codec(kp.public_key);
  const std::vector<std::uint8_t> ones(5, 1), mixed = {1, 0, 0, 1, 0, 1};
  for (const auto& m : {ones, mixed}) {
    const auto enc = encrypt_mask(m, codec, rng);
    const auto enc2 = encrypt_mask(m, codec, kp.private_key, rng);
    ASSERT_EQ(enc.size(), m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_EQ(enc[i].exponent, 0);
      EXPECT_EQ(codec.decrypt(kp.private_key, enc[i]), m[i]);
      EXPECT_EQ(codec.decrypt(kp.private_key, enc2[i]), m[i]);
    }
  }
  EXPECT_TRUE(encrypt_mask({}, codec, rng).empty());
  const std::vector<std::uint8_t> bad = {2};
  EXPECT_THROW(encrypt_mask(bad, codec, rng), RangeError);
}

}  // namespace
}  // namespace vflr::linkage

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

#include <bit>
#include <cmath>
#include <random>
#include <thread>

#include "support/test_random.hpp"
#include "vflr/common/error.hpp"
#include "vflr/learn/loss.hpp"
#include "vflr/learn/sag.hpp"
#include "vflr/protocol/audit.hpp"
#include "vflr/protocol/message.hpp"
#include "vflr/protocol/session.hpp"
#include "vflr/protocol/transcript.hpp"
#include "vflr/protocol/transport.hpp"

namespace vflr::protocol {
namespace {

const he::KeyPair& key512() {
  static const he::KeyPair kp = [] {
    testing::SeededRandom rng(21);
    he::KeygenOptions opt;
    opt.bits = 512;
    opt.allow_insecure = true;
    return he::generate_keypair(opt, rng);
  }();
  return kp;
}

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::uint8_t> mask;
  std::size_t d_a = 0;
};

Problem make_problem(Eigen::Index n, Eigen::Index d_a, Eigen::Index d_b,
                     double match_rate, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution keep(match_rate);
  const Eigen::Index d = d_a + d_b;
  Problem p{Eigen::MatrixXd(n, d), Eigen::VectorXd(n), {}, std::size_t(d_a)};
  Eigen::VectorXd w(d);
  for (auto& v : w) v = nd(gen);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p.X(i, j) = nd(gen);
    p.y[i] = p.X.row(i).dot(w) + 0.3 * nd(gen) > 0 ? 1 : -1;
    p.mask.push_back(keep(gen) ? 1 : 0);
  }
  return p;
}

SessionConfig small_config(std::size_t holdout, std::size_t batch,
                           std::size_t epochs) {
  SessionConfig cfg;
  cfg.train.holdout = holdout;
  cfg.train.batch = batch;
  cfg.train.max_epochs = epochs;
  cfg.train.seed = 5;
  cfg.key_bits = 512;
  cfg.allow_insecure = true;
  return cfg;
}

SessionResult run(const Problem& p, const SessionConfig& cfg,
                  Transcript* t = nullptr) {
  const auto d_a = static_cast<Eigen::Index>(p.d_a);
  const Eigen::Index d_b = p.X.cols() - d_a;
  CoordinatorInput c{p.mask, p.d_a, static_cast<std::size_t>(d_b), key512()};
  ProviderAInput a{p.X.leftCols(d_a), p.y};
  ProviderBInput b{p.X.rightCols(d_b)};
  return run_session(cfg, std::move(c), std::move(a), std::move(b), t);
}

Eigen::VectorXd mask_vector(const std::vector<std::uint8_t>& m) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) out[Eigen::Index(i)] = m[i];
  return out;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// ---- wire ----------------------------------------------------------------

TEST(Frame, RoundTrip) {
  Frame f{MessageKind::EncWZ, 0x0102030405060708ull, 9, {1, 2, 3}};
  const Bytes wire = encode_frame(f);
  ASSERT_EQ(wire.size(), kFrameHeader + 3);
  EXPECT_EQ(wire[0], 0);
  EXPECT_EQ(wire[3], 1 + 8 + 8 + 3);
  EXPECT_EQ(wire[4], 6);
  const Frame g = decode_frame(wire);
  EXPECT_EQ(g.kind, f.kind);
  EXPECT_EQ(g.session, f.session);
  EXPECT_EQ(g.seq, f.seq);
  EXPECT_EQ(g.payload, f.payload);
}

TEST(Frame, RejectsCorruption) {
  Bytes wire = encode_frame({MessageKind::EncLoss, 1, 1, {7}});
  Bytes truncated(wire.begin(), wire.end() - 1);
  EXPECT_THROW(decode_frame(truncated), DecodeError);
  Bytes bad_kind = wire;
  bad_kind[4] = 42;
  EXPECT_THROW(decode_frame(bad_kind), DecodeError);
}

TEST(Payload, RoundTrips) {
  const encoding::FloatCodec codec(key512().public_key);
  testing::SeededRandom rng(3);
  PartialU p;
  p.phase = Phase::Loss;
  p.theta = {0.5, -2.0};
  p.rows = {4, 1};
  p.parts = {codec.encrypt(1.5, rng), codec.encrypt(-3.0, rng)};
  p.extra = {codec.encrypt(0.25, rng)};
  const PartialU q = decode_partial(codec, encode_partial(codec, p));
  EXPECT_EQ(q.phase, p.phase);
  EXPECT_EQ(q.theta, p.theta);
  EXPECT_EQ(q.rows, p.rows);
  ASSERT_EQ(q.parts.size(), 2u);
  EXPECT_EQ(codec.decrypt(key512().private_key, q.parts[1]), -3.0);
  EXPECT_EQ(codec.decrypt(key512().private_key, q.extra[0]), 0.25);

  HoldoutInit h{3, {}, {}, {}};
  EXPECT_EQ(decode_holdout(nullptr, encode_holdout(nullptr, h)).h, 3u);
  ModelBroadcast m{Phase::Finish, {1.0, 2.0}};
  EXPECT_EQ(decode_model(encode_model(m)).theta, m.theta);
  Bytes trailing = encode_model(m);
  trailing.push_back(0);
  EXPECT_THROW(decode_model(trailing), DecodeError);
}

// ---- transport -----------------------------------------------------------

TEST(InProcessLink, FifoAndClose) {
  auto [x, y] = make_in_process_link();
  x->send({1});
  x->send({2});
  EXPECT_EQ(y->receive(), Bytes{1});
  EXPECT_EQ(y->receive(), Bytes{2});
  std::thread t([&] { x->close(); });
  EXPECT_THROW(y->receive(), TransportError);
  t.join();
  EXPECT_THROW(y->send({3}), TransportError);
}

TEST(TcpLink, LoopbackExchange) {
  TcpListener listener(parse_endpoint("127.0.0.1:0"));
  const Endpoint to{"127.0.0.1", listener.port()};
  std::unique_ptr<Link> client;
  std::thread t([&] { client = tcp_connect(to, 2); });
  auto [role, server] = listener.accept();
  t.join();
  EXPECT_EQ(role, 2);
  const Bytes frame = encode_frame({MessageKind::EncLoss, 7, 1, {9, 9}});
  client->send(frame);
  EXPECT_EQ(server->receive(), frame);
  client->close();
  EXPECT_THROW(server->receive(), TransportError);
}

TEST(Endpoint, Parse) {
  EXPECT_EQ(parse_endpoint("localhost:80").port, 80);
  EXPECT_EQ(parse_endpoint("[::1]:9").host, "::1");
  EXPECT_THROW(parse_endpoint("nope"), ConfigError);
  EXPECT_THROW(parse_endpoint("h:70000"), ConfigError);
}

// ---- audit ---------------------------------------------------------------

TEST(Hypergeometric, MatchesEnumeration) {
  for (unsigned n = 1; n <= 12; ++n) {
    // hist[M][s][x]: subsets of size s with x marked items, marked = low M.
    std::vector<std::vector<std::vector<double>>> hist(
        n + 1, std::vector<std::vector<double>>(n + 1,
                                                std::vector<double>(n + 1)));
    for (std::uint32_t s = 0; s < (1u << n); ++s) {
      const int size = std::popcount(s);
      for (unsigned M = 0; M <= n; ++M) {
        hist[M][size][std::popcount(s & ((1u << M) - 1))] += 1;
      }
    }
    for (unsigned M = 0; M <= n; ++M) {
      for (unsigned s = 0; s <= n; ++s) {
        double total = 0, acc = 0;
        for (double c : hist[M][s]) total += c;
        for (unsigned k = 0; k <= n; ++k) {
          acc += hist[M][s][k];
          EXPECT_NEAR(hypergeometric_cdf(n, M, s, k), acc / total, 1e-15)
              << n << ' ' << M << ' ' << s << ' ' << k;
        }
      }
    }
  }
}

TEST(Hypergeometric, AuditOnMask) {
  std::vector<std::uint8_t> mask(100, 0);
  for (int i = 0; i < 90; ++i) mask[i] = 1;
  const BatchAudit a = audit_batch_leakage(mask, 10);
  EXPECT_EQ(a.matches, 90u);
  EXPECT_LT(a.p_at_most_one, 1e-9);
  mask.assign(100, 0);
  EXPECT_EQ(audit_batch_leakage(mask, 10).p_at_most_one, 1.0);
  EXPECT_THROW(audit_batch_leakage(std::vector<std::uint8_t>{2}, 1),
               RangeError);
}

// ---- sessions ------------------------------------------------------------

TEST(Session, MatchesPlaintextOracle) {
  const Problem p = make_problem(60, 2, 3, 0.8, 1);
  const SessionConfig cfg = small_config(12, 10, 3);
  Transcript t;
  const SessionResult r = run(p, cfg, &t);
  ASSERT_FALSE(r.aborted) << r.abort_reason;

  const Eigen::VectorXd m = mask_vector(p.mask);
  const learn::TrainResult oracle = learn::train_sag(p.X, p.y, cfg.train, m);
  const auto& c = r.coordinator;
  ASSERT_EQ(c.epochs, oracle.epochs);
  EXPECT_LE(rel_err(c.theta, oracle.theta), 1e-9);

  const learn::BatchPlan plan = learn::make_batch_plan(60, cfg.train);
  ASSERT_EQ(c.gradients.size(), plan.batches.size() * c.epochs);
  for (const auto& g : c.gradients) {
    const auto& rows = plan.batches[g.batch];
    Eigen::MatrixXd Xb(Eigen::Index(rows.size()), p.X.cols());
    Eigen::VectorXd yb(Eigen::Index(rows.size())), mb(Eigen::Index(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Xb.row(Eigen::Index(i)) = p.X.row(Eigen::Index(rows[i]));
      yb[Eigen::Index(i)] = p.y[Eigen::Index(rows[i])];
      mb[Eigen::Index(i)] = m[Eigen::Index(rows[i])];
    }
    EXPECT_LE(rel_err(g.gradient,
                      learn::masked_gradient_sum(g.theta, Xb, yb, mb)),
              1e-9);
  }
  for (std::size_t e = 0; e < c.trace.size(); ++e) {
    const double want = oracle.trace[e].holdout_taylor;
    EXPECT_LE(std::abs(c.trace[e].holdout_taylor - want),
              1e-9 * std::max(std::abs(want), 1e-12));
  }
}

TEST(Session, TranscriptIsClean) {
  const Problem p = make_problem(50, 2, 2, 0.9, 2);
  const SessionConfig cfg = small_config(10, 8, 2);
  Transcript t;
  const SessionResult r = run(p, cfg, &t);
  ASSERT_FALSE(r.aborted) << r.abort_reason;
  const auto log = t.entries();
  EXPECT_TRUE(check_routing(log).empty());

  SensitiveValues s;
  s.features.assign(p.X.data(), p.X.data() + p.X.size());
  s.mask = p.mask;
  s.entity_ids = {"entity-0001", "entity-0002"};
  s.hidden = r.mean_ciphertexts;
  s.hidden_owner = Role::ProviderB;
  ASSERT_EQ(s.hidden.size(), 4u);
  const auto leaks = scan_for_leaks(log, s);
  for (const auto& f : leaks) ADD_FAILURE() << f.entry << ": " << f.what;
  // B's own half of <mu_H> appears nowhere at all.
  SensitiveValues own;
  own.labels = false;
  own.hidden.assign(r.mean_ciphertexts.begin() + 2, r.mean_ciphertexts.end());
  EXPECT_TRUE(scan_for_leaks(log, own).empty());

  const std::size_t n_train = 40, batches = 5;
  for (std::size_t e = 1; e <= r.coordinator.epochs; ++e) {
    EXPECT_EQ(t.ciphertexts("gradient", e),
              gradient_ciphertexts_per_epoch(n_train, batches, 2, 2));
    EXPECT_LE(t.ciphertexts("gradient", e), 2 * n_train + 2 * batches * 4);
    EXPECT_EQ(t.ciphertexts("loss", e), loss_ciphertexts_per_epoch(10));
  }
}

TEST(Session, ScannerCatchesPlantedLeak) {
  std::vector<TranscriptEntry> log(1);
  ByteWriter w;
  w.u8(0);
  w.f64(0.1234);
  log[0].payload = std::move(w).take();
  SensitiveValues s;
  s.features = {0.1234};
  EXPECT_EQ(scan_for_leaks(log, s).size(), 1u);
  log[0].from = Role::ProviderA;
  log[0].to = Role::Coordinator;
  log[0].kind = MessageKind::EncMask;
  EXPECT_EQ(check_routing(log).size(), 1u);
}

TEST(Session, ScannerIgnoresCiphertextBoundaries) {
  // A ciphertext ending in 3f f0 followed by a zero exponent reads as 1.0.
  ByteWriter w;
  w.u32(1);
  w.prefixed(Bytes{0x12, 0x34, 0x3f, 0xf0});
  w.i64(0);
  std::vector<TranscriptEntry> log(1);
  log[0].kind = MessageKind::EncMask;
  log[0].payload = std::move(w).take();
  const auto spans = opaque_spans(MessageKind::EncMask, log[0].payload);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], std::make_pair(std::size_t{8}, std::size_t{12}));
  SensitiveValues s;
  EXPECT_TRUE(scan_for_leaks(log, s).empty());
  log[0].kind = MessageKind::Abort;
  EXPECT_EQ(scan_for_leaks(log, s).size(), 1u);
}

TEST(Session, OpaqueSpansCoverEveryCiphertext) {
  const encoding::FloatCodec codec(key512().public_key);
  testing::SeededRandom rng(4);
  PartialU m;
  m.phase = Phase::Loss;
  m.theta = {0.1234, 2.0};
  m.rows = {1, 2, 3};
  m.parts = {codec.encrypt(1.0, rng), codec.encrypt(-1.0, rng)};
  m.extra = {codec.encrypt(0.5, rng)};
  const Bytes p = encode_partial(codec, m);
  const auto spans = opaque_spans(MessageKind::EncPartialU, p);
  ASSERT_EQ(spans.size(), 3u);
  const std::size_t ct = key512().public_key.modulus_squared().get_str(16).size();
  for (const auto& [b, e] : spans) EXPECT_GE(e - b, ct / 2 - 1);
  // theta stays outside every span, so a planted value is still found.
  std::vector<TranscriptEntry> log(1);
  log[0].kind = MessageKind::EncPartialU;
  log[0].payload = p;
  SensitiveValues s;
  s.labels = false;
  s.features = {0.1234};
  EXPECT_EQ(scan_for_leaks(log, s).size(), 1u);
  EXPECT_TRUE(opaque_spans(MessageKind::ModelBroadcast,
                           encode_model({Phase::Finish, {1.0}})).empty());
  EXPECT_EQ(opaque_spans(MessageKind::PublicKey,
                         key512().public_key.serialize()).size(), 1u);
}

TEST(Session, ZeroMaskLeavesModelAtZero) {
  Problem p = make_problem(30, 1, 1, 0.0, 3);
  std::fill(p.mask.begin(), p.mask.end(), 0);
  const SessionResult r = run(p, small_config(5, 25, 1));
  ASSERT_FALSE(r.aborted) << r.abort_reason;
  EXPECT_EQ(r.coordinator.theta, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(r.coordinator.trace.at(0).holdout_taylor, 0.0);
}

TEST(Session, SingleBatchSingleEpoch) {
  const Problem p = make_problem(20, 1, 2, 1.0, 4);
  const SessionConfig cfg = small_config(4, 16, 1);
  const SessionResult r = run(p, cfg);
  ASSERT_FALSE(r.aborted) << r.abort_reason;
  const auto oracle =
      learn::train_sag(p.X, p.y, cfg.train, mask_vector(p.mask));
  EXPECT_EQ(r.coordinator.gradients.size(), 1u);
  EXPECT_LE(rel_err(r.coordinator.theta, oracle.theta), 1e-9);
}

TEST(Session, AuditCeilingAborts) {
  const Problem p = make_problem(20, 1, 1, 0.1, 6);
  SessionConfig cfg = small_config(4, 4, 1);
  cfg.audit_ceiling = 0.0;
  const SessionResult r = run(p, cfg);
  EXPECT_TRUE(r.aborted);
  EXPECT_NE(r.abort_reason.find("audit"), std::string::npos);
  EXPECT_TRUE(r.coordinator.trace.empty());
}

TEST(Session, MissingHoldoutIsConfigError) {
  const Problem p = make_problem(20, 1, 1, 1.0, 7);
  const SessionResult r = run(p, small_config(0, 4, 1));
  EXPECT_TRUE(r.aborted);
  EXPECT_NE(r.abort_reason.find("hold-out"), std::string::npos);
}

TEST(Session, OverTcpMatchesInProcess) {
  const Problem p = make_problem(30, 1, 2, 0.9, 8);
  const SessionConfig cfg = small_config(6, 8, 2);
  const TcpTopology topo{parse_endpoint("127.0.0.1:47311"),
                         parse_endpoint("127.0.0.1:47312")};
  Coordinator c(cfg, {p.mask, 1, 2, key512()});
  ProviderA a(cfg, {p.X.leftCols(1), p.y});
  ProviderB b(cfg, {p.X.rightCols(2)});
  std::thread ta([&] {
    auto links = connect_tcp(Role::ProviderA, topo);
    a.run(*links.first, *links.second);
  });
  std::thread tb([&] {
    auto links = connect_tcp(Role::ProviderB, topo);
    b.run(*links.first, *links.second);
  });
  auto links = connect_tcp(Role::Coordinator, topo);
  c.run(*links.first, *links.second);
  ta.join();
  tb.join();
  const SessionResult local = run(p, cfg);
  EXPECT_EQ(c.result().theta, local.coordinator.theta);
}

// Drives provider B by hand, playing both other parties.
class ScriptedB : public ::testing::Test {
 protected:
  void SetUp() override {
    cb_ = make_in_process_link();
    ab_ = make_in_process_link();
    SessionConfig cfg = small_config(2, 2, 1);
    ProviderB b(cfg, {Eigen::MatrixXd::Ones(4, 1)});
    worker_ = std::thread([this, b]() mutable {
      try {
        b.run(*cb_.second, *ab_.second);
      } catch (const std::exception& e) {
        error_ = e.what();
      }
    });
    c_ = std::make_unique<Port>(Role::Coordinator, Role::ProviderB,
                                *cb_.first, 1);
    const encoding::FloatCodec codec(key512().public_key);
    c_->send(MessageKind::PublicKey, key512().public_key.serialize(), 0, "");
    std::vector<encoding::EncryptedNumber> mask(4, codec.encrypt(1.0));
    c_->send(MessageKind::EncMask, encode_vector(codec, mask), 4, "");
  }
  void TearDown() override {
    if (worker_.joinable()) worker_.join();
  }

  LinkPair cb_, ab_;
  std::unique_ptr<Port> c_;
  std::thread worker_;
  std::string error_;
};

TEST_F(ScriptedB, PartialBeforeHoldoutAborts) {
  Port a(Role::ProviderA, Role::ProviderB, *ab_.first, 1);
  const encoding::FloatCodec codec(key512().public_key);
  PartialU p;
  p.theta = {0.0, 0.0};
  p.rows = {0};
  p.parts = {codec.encrypt(1.0)};
  a.send(MessageKind::EncPartialU, encode_partial(codec, p), 1, "");
  EXPECT_THROW(a.receive(), PeerAborted);
  EXPECT_THROW(c_->receive(), PeerAborted);
  worker_.join();
  EXPECT_NE(error_.find("before HoldoutInit"), std::string::npos);
}

TEST_F(ScriptedB, OutOfOrderSequenceAborts) {
  Frame f{MessageKind::ModelBroadcast, 1, 5,
          encode_model({Phase::Finish, {}})};
  ab_.first->send(encode_frame(f));
  worker_.join();
  EXPECT_NE(error_.find("out-of-order"), std::string::npos);
}

TEST_F(ScriptedB, ForeignSessionAborts) {
  Frame f{MessageKind::ModelBroadcast, 99, 1,
          encode_model({Phase::Finish, {}})};
  ab_.first->send(encode_frame(f));
  worker_.join();
  EXPECT_NE(error_.find("another session"), std::string::npos);
}

TEST_F(ScriptedB, FinishEndsCleanly) {
  Port a(Role::ProviderA, Role::ProviderB, *ab_.first, 1);
  a.send(MessageKind::ModelBroadcast, encode_model({Phase::Finish, {}}), 0,
         "");
  worker_.join();
  EXPECT_TRUE(error_.empty()) << error_;
}

}  // namespace
}  // namespace vflr::protocol

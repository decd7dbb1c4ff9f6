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

// One PASS/FAIL line per acceptance criterion. Run all of them, or one with
// --criterion N. Exit status is nonzero if any selected criterion fails.

#include <mpfr.h>

#include <algorithm>
#include <bit>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/test_random.hpp"
#include "support/theory_instances.hpp"
#include "vflr/encoding/float_codec.hpp"
#include "vflr/he/paillier.hpp"
#include "vflr/learn/dataset.hpp"
#include "vflr/learn/loss.hpp"
#include "vflr/learn/metrics.hpp"
#include "vflr/learn/sag.hpp"
#include "vflr/pipeline/run.hpp"
#include "vflr/protocol/audit.hpp"
#include "vflr/protocol/session.hpp"
#include "vflr/protocol/transcript.hpp"
#include "vflr/theory/theory.hpp"

#ifndef VFLR_FIXTURES
#define VFLR_FIXTURES "tests/fixtures"
#endif

namespace {

using namespace vflr;
using testing::SeededRandom;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

const he::KeyPair& key1024() {
  static const he::KeyPair kp = [] {
    SeededRandom rng(1024);
    return he::generate_keypair({.bits = 1024}, rng);
  }();
  return kp;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// ---- 1: homomorphic correctness --------------------------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  const auto& [pk, sk] = key1024();
  const he::BigInt& m = pk.modulus();
  SeededRandom rng(101);
  std::size_t failures = 0;
  const int triples = 10000;
  for (int i = 0; i < triples; ++i) {
    const he::BigInt x = he::uniform_below(m, rng);
    const he::BigInt y = he::uniform_below(m, rng);
    const he::BigInt k = he::uniform_below(m, rng);
    const auto cx = sk.encrypt(x, rng);
    const auto cy = sk.encrypt(y, rng);
    const he::BigInt sum = (x + y) % m;
    const he::BigInt prod = (x * k) % m;
    if (sk.decrypt(pk.add(cx, cy)) != sum) ++failures;
    if (sk.decrypt(pk.mul_plain(cx, k, rng)) != prod) ++failures;
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs <= 120.0,
          fmt("triples=%d failures=%zu runtime=%.1fs (limit 120s)", triples,
              failures, secs)};
}

// ---- 2: encoding exactness -------------------------------------------------

Outcome criterion2() {
  const auto t0 = Clock::now();
  const auto& [pk, sk] = key1024();
  const encoding::FloatCodec codec(pk);
  std::mt19937_64 gen(202);
  std::size_t mismatches = 0;
  const std::size_t values = 1000000;
  for (std::size_t i = 0; i < values; ++i) {
    double q;
    do q = std::bit_cast<double>(gen());
    while (!std::isnormal(q));
    if (std::bit_cast<std::uint64_t>(codec.decode(codec.encode(q))) !=
        std::bit_cast<std::uint64_t>(q)) {
      ++mismatches;
    }
  }

  // Nineteen 53-bit significands fill at most 1007 bits, inside the lower
  // third of a 1024-bit modulus, so the codec runs at base 2.
  const encoding::FloatCodec base2(pk, 2);
  SeededRandom rng(203);
  std::uniform_real_distribution<double> mant(1.0, 2.0);
  std::uniform_int_distribution<int> expo(-50, 50);
  const int chains = 200, factors = 19;
  std::size_t chain_failures = 0;
  mpfr_t exact;
  mpfr_init2(exact, 4096);
  for (int c = 0; c < chains; ++c) {
    std::vector<double> f(factors);
    for (auto& v : f) v = (gen() & 1 ? -1 : 1) * std::ldexp(mant(gen), expo(gen));
    auto acc = base2.encrypt(f[0], rng);
    mpfr_set_d(exact, f[0], MPFR_RNDN);
    for (int i = 1; i < factors; ++i) {
      acc = base2.mul_plain(acc, f[i], rng);
      mpfr_mul_d(exact, exact, f[i], MPFR_RNDN);
    }
    const double want = mpfr_get_d(exact, MPFR_RNDN);
    if (std::bit_cast<std::uint64_t>(base2.decrypt(sk, acc)) !=
        std::bit_cast<std::uint64_t>(want)) {
      ++chain_failures;
    }
  }
  mpfr_clear(exact);
  const double secs = seconds_since(t0);
  return {mismatches == 0 && chain_failures == 0 && secs <= 120.0,
          fmt("round_trips=%zu mismatches=%zu chains=%d x %d factors "
              "failures=%zu runtime=%.1fs (limit 120s)",
              values, mismatches, chains, factors, chain_failures, secs)};
}

// ---- 3: protocol vs plaintext oracle ---------------------------------------

struct ProtocolInstance {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::uint8_t> mask;
  std::size_t d_a = 0;
  protocol::SessionConfig cfg;
};

ProtocolInstance protocol_instance(std::uint64_t seed) {
  std::mt19937_64 gen(seed * 7919 + 3);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProtocolInstance p;
  const auto n = static_cast<Eigen::Index>(100 + gen() % 401);
  const auto d_a = static_cast<Eigen::Index>(1 + gen() % 10);
  const auto d_b = static_cast<Eigen::Index>(1 + gen() % (20 - d_a));
  const Eigen::Index d = d_a + d_b;
  const double match_rate = 0.5 + 0.5 * u(gen);
  p.d_a = static_cast<std::size_t>(d_a);
  p.X.resize(n, d);
  p.y.resize(n);
  Eigen::VectorXd w(d), scale(d);
  for (auto& v : w) v = nd(gen);
  for (auto& v : scale) v = std::pow(10.0, 2.0 * u(gen) - 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p.X(i, j) = nd(gen);
    p.y[i] = p.X.row(i).dot(w) + 0.5 * nd(gen) > 0 ? 1.0 : -1.0;
    p.X.row(i) = p.X.row(i).cwiseProduct(scale.transpose());
    p.mask.push_back(u(gen) < match_rate ? 1 : 0);
  }
  p.mask[0] = 1;
  const std::size_t batches[] = {16, 32, 64};
  p.cfg.train.batch = batches[gen() % 3];
  p.cfg.train.holdout = static_cast<std::size_t>(n) / 10;
  p.cfg.train.max_epochs = 2 + gen() % 2;
  p.cfg.train.patience = 100;
  p.cfg.train.seed = gen();
  p.cfg.key_bits = 1024;
  p.cfg.session_id = seed + 1;
  return p;
}

struct ProtocolRun {
  ProtocolInstance p;
  protocol::SessionResult result;
  std::vector<protocol::TranscriptEntry> log;
};

// The twenty seeded sessions shared by criteria 3 and 8.
const std::vector<ProtocolRun>& protocol_runs() {
  static const std::vector<ProtocolRun> runs = [] {
    std::vector<ProtocolRun> out;
    for (std::uint64_t s = 0; s < 20; ++s) {
      ProtocolRun r{protocol_instance(s), {}, {}};
      const auto d_a = static_cast<Eigen::Index>(r.p.d_a);
      const Eigen::Index d_b = r.p.X.cols() - d_a;
      protocol::Transcript t;
      r.result = protocol::run_session(
          r.p.cfg,
          {r.p.mask, r.p.d_a, static_cast<std::size_t>(d_b), key1024()},
          {r.p.X.leftCols(d_a), r.p.y}, {r.p.X.rightCols(d_b)}, &t);
      r.log = t.entries();
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  key1024();
  const auto& runs = protocol_runs();
  double worst_grad = 0, worst_loss = 0, worst_theta = 0;
  std::size_t gradients = 0, losses = 0, problems = 0;
  std::size_t max_n = 0, max_d = 0;
  for (const auto& r : runs) {
    const auto& p = r.p;
    max_n = std::max<std::size_t>(max_n, p.X.rows());
    max_d = std::max<std::size_t>(max_d, p.X.cols());
    if (r.result.aborted) {
      ++problems;
      continue;
    }
    Eigen::VectorXd m(p.X.rows());
    for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = p.mask[i];
    const auto oracle = learn::train_sag(p.X, p.y, p.cfg.train, m);
    const auto& c = r.result.coordinator;
    if (c.epochs != oracle.epochs) ++problems;
    worst_theta =
        std::max(worst_theta, (c.theta - oracle.theta).cwiseAbs().maxCoeff());
    const auto plan = learn::make_batch_plan(p.X.rows(), p.cfg.train);
    if (c.gradients.size() != plan.batches.size() * c.epochs) ++problems;
    for (const auto& g : c.gradients) {
      const auto& rows = plan.batches[g.batch];
      const auto nb = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd Xb(nb, p.X.cols());
      Eigen::VectorXd yb(nb), mb(nb);
      for (Eigen::Index i = 0; i < nb; ++i) {
        Xb.row(i) = p.X.row(Eigen::Index(rows[i]));
        yb[i] = p.y[Eigen::Index(rows[i])];
        mb[i] = m[Eigen::Index(rows[i])];
      }
      worst_grad = std::max(
          worst_grad,
          rel_err(g.gradient, learn::masked_gradient_sum(g.theta, Xb, yb, mb)));
      ++gradients;
    }
    if (c.trace.size() != oracle.trace.size()) ++problems;
    for (std::size_t e = 0; e < std::min(c.trace.size(), oracle.trace.size());
         ++e) {
      const double want = oracle.trace[e].holdout_taylor;
      worst_loss = std::max(worst_loss,
                            std::abs(c.trace[e].holdout_taylor - want) /
                                std::max(std::abs(want), 1e-300));
      ++losses;
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = problems == 0 && worst_grad <= 1e-9 && worst_loss <= 1e-9 &&
                    worst_theta <= 1e-6 && secs <= 600.0;
  return {pass,
          fmt("instances=%zu (n<=%zu d<=%zu) gradients=%zu max_rel=%.2e "
              "(tol 1e-9) losses=%zu max_rel=%.2e (tol 1e-9) theta_max_abs=%.2e "
              "(tol 1e-6) structural_problems=%zu runtime=%.1fs (limit 600s)",
              runs.size(), max_n, max_d, gradients, worst_grad, losses,
              worst_loss, worst_theta, problems, secs)};
}

// ---- 4: Taylor vs logistic -------------------------------------------------

struct Labelled {
  std::string name;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

// Versicolor (+1) against virginica (-1); setosa is dropped.
Labelled iris_fixture() {
  const auto table = learn::read_csv(std::string(VFLR_FIXTURES) + "/iris_like.csv");
  learn::CsvTable two;
  two.header = table.header;
  const std::size_t species = table.column("species");
  for (const auto& row : table.rows) {
    if (row[species] != "setosa") two.rows.push_back(row);
  }
  auto ds = learn::dataset_from_table(
      two, "species",
      {"sepal_length", "sepal_width", "petal_length", "petal_width"},
      {"versicolor"});
  return {"iris_like", ds.X, ds.y};
}

Labelled gaussian_blobs(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  const Eigen::Index n = 400, d = 4;
  Labelled out{"blobs", Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double yi = i % 2 ? 1.0 : -1.0;
    out.y[i] = yi;
    for (Eigen::Index j = 0; j < d; ++j) {
      out.X(i, j) = 0.6 * yi * (j + 1) / d + nd(gen);
    }
  }
  return out;
}

Labelled logistic_model(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index n = 1000, d = 8;
  Labelled out{"logistic", Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  Eigen::VectorXd w(d);
  for (auto& v : w) v = nd(gen);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double common = nd(gen);
    for (Eigen::Index j = 0; j < d; ++j) {
      out.X(i, j) = 0.5 * common + nd(gen) * (1.0 + j % 3);
    }
    const double z = out.X.row(i).dot(w) * 0.5;
    out.y[i] = u(gen) < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : -1.0;
  }
  return out;
}

Outcome criterion4() {
  const auto t0 = Clock::now();
  const std::vector<Labelled> sets = {iris_fixture(), gaussian_blobs(41),
                                      logistic_model(42)};
  std::ostringstream os;
  double worst = 0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& s = sets[k];
    const std::size_t n = s.X.rows();
    const auto test = learn::sample_holdout(n, n * 3 / 10, 400 + k);
    const auto train = learn::complement(n, test);
    const auto st = learn::Standardizer::fit(s.X, train);
    Eigen::MatrixXd Z(n, s.X.cols() + 1);
    Z << st.transform(s.X), Eigen::VectorXd::Ones(n);
    auto rows_of = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& X,
                       Eigen::VectorXd& y) {
      X.resize(Eigen::Index(idx.size()), Z.cols());
      y.resize(Eigen::Index(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        X.row(Eigen::Index(i)) = Z.row(Eigen::Index(idx[i]));
        y[Eigen::Index(i)] = s.y[Eigen::Index(idx[i])];
      }
    };
    Eigen::MatrixXd Xtr, Xte;
    Eigen::VectorXd ytr, yte;
    rows_of(train, Xtr, ytr);
    rows_of(test, Xte, yte);
    learn::TrainConfig cfg;
    cfg.eta = 0.05;
    cfg.gamma = 0.005;
    cfg.batch = 16;
    cfg.max_epochs = 200;
    cfg.seed = 7 + k;
    cfg.loss = learn::LossKind::Taylor;
    const auto taylor = learn::evaluate(learn::train_sag(Xtr, ytr, cfg).theta, Xte, yte);
    cfg.loss = learn::LossKind::Logistic;
    const auto logistic = learn::evaluate(learn::train_sag(Xtr, ytr, cfg).theta, Xte, yte);
    const double da = taylor.accuracy - logistic.accuracy;
    const double du = taylor.auc - logistic.auc;
    worst = std::max({worst, std::abs(da), std::abs(du)});
    os << fmt(" %s[acc %.2f/%.2f d=%+.2f auc %.2f/%.2f d=%+.2f]", s.name.c_str(),
              taylor.accuracy, logistic.accuracy, da, taylor.auc, logistic.auc,
              du);
  }
  const double secs = seconds_since(t0);
  return {worst <= 2.0 && secs <= 300.0,
          fmt("max_abs_delta=%.2f points (tol 2.0)", worst) + os.str() +
              fmt(" runtime=%.1fs (limit 300s)", secs)};
}

// ---- 5: end-to-end pipeline ------------------------------------------------

Outcome criterion5() {
  const auto t0 = Clock::now();
  std::ostringstream os;
  bool pass = true;
  double worst = 0;
  for (double f : {1.0, 0.66, 0.33}) {
    pipeline::RunConfig cfg;
    cfg.mode = pipeline::Mode::Secure;
    cfg.synthetic_rows = 5000;
    cfg.split.overlap = f;
    cfg.seed = 1;
    const auto r = pipeline::run(cfg);
    const bool counts = r.gradient_ciphertexts == r.expected_gradient_ciphertexts &&
                        r.loss_ciphertexts == r.expected_loss_ciphertexts;
    worst = std::max({worst, std::abs(r.delta.accuracy), std::abs(r.delta.auc)});
    pass = pass && !r.aborted && counts && std::abs(r.delta.accuracy) <= 0.5 &&
           std::abs(r.delta.auc) <= 0.5;
    os << fmt(" f=%.2f[acc %.2f vs %.2f d=%+.2f auc %.2f vs %.2f d=%+.2f "
              "matching_error=%.2f%% recall=%.2f%% grad_ct=%zu/%zu loss_ct=%zu/%zu]",
              f, r.model.accuracy, r.baseline.accuracy, r.delta.accuracy,
              r.model.auc, r.baseline.auc, r.delta.auc,
              100.0 * r.matching_error, 100.0 * r.recall,
              r.gradient_ciphertexts, r.expected_gradient_ciphertexts,
              r.loss_ciphertexts, r.expected_loss_ciphertexts);
  }
  const double secs = seconds_since(t0);
  pass = pass && secs <= 1200.0;
  return {pass, fmt("max_abs_delta=%.2f points (tol 0.5)", worst) + os.str() +
                    fmt(" runtime=%.1fs (limit 1200s)", secs)};
}

// ---- 6: drift recurrence ---------------------------------------------------

Outcome criterion6() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  std::size_t failures = 0, errors = 0;
  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<Eigen::Index>(10 + gen() % 41);
    const auto d_a = static_cast<Eigen::Index>(1 + gen() % 5);
    const auto d_b = static_cast<Eigen::Index>(1 + gen() % (10 - d_a));
    const std::size_t T = 1 + gen() % 10;
    const double rho = u(gen);
    const double gamma = std::pow(10.0, -2.0 + 3.0 * u(gen));
    const auto in = testing::random_theory_instance(gen(), n, d_a, d_b, T, rho,
                                                    gamma);
    try {
      const auto dr = theory::drift_recurrence(in.X, in.y, in.d_anchor, in.f,
                                               in.gamma);
      worst = std::max(worst, dr.max_step_error);
      if (!(dr.max_step_error <= 1e-8)) ++failures;
    } catch (const std::exception&) {
      ++errors;
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && errors == 0 && secs <= 300.0,
          fmt("instances=100 max_step_error=%.2e (tol 1e-8) failures=%zu "
              "solver_errors=%zu runtime=%.1fs (limit 300s)",
              worst, failures, errors, secs)};
}

// ---- 7: bound soundness ----------------------------------------------------

// Column sums of y_i x_i taken over sorted terms, so two data sets holding
// the same terms in any row order give identical doubles.
Eigen::VectorXd order_free_mean_operator(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y) {
  Eigen::VectorXd mu(X.cols());
  std::vector<double> terms(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) terms[i] = y[i] * X(i, j);
    std::sort(terms.begin(), terms.end());
    double s = 0;
    for (double t : terms) s += t;
    mu[j] = s;
  }
  return mu;
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  std::size_t accepted = 0, tried = 0;
  std::size_t t2_fail = 0, alpha_fail = 0, gap_fail = 0;
  std::size_t within = 0, within_fail = 0;
  double worst_t2 = 0;
  for (std::uint64_t s = 0; accepted < 100 && s < 1000; ++s) {
    ++tried;
    const auto in = testing::calibrated_instance(s);
    theory::CheckOptions opt;
    opt.alpha = 0.25;
    opt.directions = 10000;
    opt.seed = s;
    const auto t1 = theory::check_theorem1(in.X, in.y, in.d_anchor, in.f,
                                           in.gamma, {}, opt);
    if (!t1.assumptions.hold() || t1.excluded) continue;
    ++accepted;
    if (t1.ratio > t1.bound_T2) {
      ++t2_fail;
      worst_t2 = std::max(worst_t2, t1.ratio / t1.bound_T2);
    }
    if (t1.ratio > t1.bound_alpha) ++alpha_fail;
    const auto gap = theory::check_loss_gap(in.X, in.y, in.d_anchor, in.f,
                                            in.gamma, {}, opt);
    if (!gap.bound_holds) ++gap_fail;
    if (in.f.T_plus() == 0) {
      ++within;
      const auto XT = theory::apply(in.X, in.d_anchor, in.f);
      if (order_free_mean_operator(XT, in.y) !=
          order_free_mean_operator(in.X, in.y)) {
        ++within_fail;
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = accepted == 100 && t2_fail == 0 && alpha_fail == 0 &&
                    gap_fail == 0 && within > 0 && within_fail == 0 &&
                    secs <= 600.0;
  return {pass,
          fmt("instances=%zu (of %zu drawn) ratio>T2_bound=%zu (worst x%.2f) "
              "ratio>alpha_bound=%zu loss_gap_violations=%zu "
              "within_class=%zu mu_changed=%zu runtime=%.1fs (limit 600s)",
              accepted, tried, t2_fail, worst_t2, alpha_fail, gap_fail, within,
              within_fail, secs)};
}

// ---- 8: leakage audit ------------------------------------------------------

std::size_t ulp_distance(double a, double b) {
  const auto x = std::bit_cast<std::int64_t>(a);
  const auto y = std::bit_cast<std::int64_t>(b);
  return static_cast<std::size_t>(x > y ? x - y : y - x);
}

Outcome criterion8() {
  const auto t0 = Clock::now();
  // Marked items are the low M bits; counts[M][s][k] over all subsets.
  std::size_t cases = 0, worst_ulp = 0;
  for (unsigned n = 1; n <= 25; ++n) {
    std::vector<double> counts((n + 1) * (n + 1) * (n + 1), 0.0);
    auto at = [&](unsigned M, unsigned s, unsigned k) -> double& {
      return counts[(M * (n + 1) + s) * (n + 1) + k];
    };
    for (std::uint32_t sub = 0; sub < (1u << n); ++sub) {
      const auto s = static_cast<unsigned>(std::popcount(sub));
      for (unsigned M = 0; M <= n; ++M) {
        at(M, s, std::popcount(sub & ((1u << M) - 1))) += 1;
      }
    }
    for (unsigned M = 0; M <= n; ++M) {
      for (unsigned s = 0; s <= n; ++s) {
        double total = 0;
        for (unsigned k = 0; k <= n; ++k) total += at(M, s, k);
        double acc = 0;
        for (unsigned k = 0; k <= n; ++k) {
          acc += at(M, s, k);
          worst_ulp = std::max(
              worst_ulp,
              ulp_distance(protocol::hypergeometric_cdf(n, M, s, k), acc / total));
          ++cases;
        }
      }
    }
  }

  std::size_t leaks = 0, routing = 0, messages = 0;
  for (const auto& r : protocol_runs()) {
    protocol::SensitiveValues v;
    for (Eigen::Index i = 0; i < r.p.X.size(); ++i) {
      if (r.p.X.data()[i] != 0.0) v.features.push_back(r.p.X.data()[i]);
    }
    v.mask = r.p.mask;
    v.hidden = r.result.mean_ciphertexts;
    v.hidden_owner = protocol::Role::ProviderB;
    leaks += protocol::scan_for_leaks(r.log, v).size();
    routing += protocol::check_routing(r.log).size();
    messages += r.log.size();
  }
  const double secs = seconds_since(t0);
  return {worst_ulp <= 1 && leaks == 0 && routing == 0,
          fmt("cdf_cases=%zu max_ulp=%zu (tol 1) transcripts=%zu messages=%zu "
              "leak_findings=%zu routing_findings=%zu runtime=%.1fs",
              cases, worst_ulp, protocol_runs().size(), messages, leaks,
              routing, secs)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {
      criterion1, criterion2, criterion3, criterion4,
      criterion5, criterion6, criterion7, criterion8};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  if (selected.empty()) {
    for (int i = 1; i <= 8; ++i) selected.push_back(i);
  }
  int failed = 0;
  for (int c : selected) {
    if (c < 1 || c > 8) {
      std::fprintf(stderr, "no criterion %d\n", c);
      return 2;
    }
    Outcome o;
    try {
      o = criteria[c - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %d: %s %s\n", c, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

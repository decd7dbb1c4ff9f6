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

#include "vflr/pipeline/run.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "vflr/common/error.hpp"
#include "vflr/he/paillier.hpp"
#include "vflr/learn/loss.hpp"
#include "vflr/linkage/match.hpp"
#include "vflr/protocol/session.hpp"
#include "vflr/protocol/transcript.hpp"
#include "vflr/theory/theory.hpp"

namespace vflr::pipeline {
namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(RunReport& r) : r_(r), t_(Clock::now()) {}
  void lap(const std::string& phase) {
    const auto now = Clock::now();
    r_.timings.emplace_back(phase,
                            std::chrono::duration<double>(now - t_).count());
    t_ = now;
  }

 private:
  RunReport& r_;
  Clock::time_point t_;
};

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X,
                        const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

Eigen::VectorXd rows_of(const Eigen::VectorXd& y,
                        const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(idx[i])];
  }
  return out;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X, bool on) {
  if (!on) return X;
  Eigen::MatrixXd out(X.rows(), X.cols() + 1);
  out << X, Eigen::VectorXd::Ones(X.rows());
  return out;
}

Eigen::MatrixXd hstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

learn::Metrics minus(const learn::Metrics& a, const learn::Metrics& b) {
  return {a.accuracy - b.accuracy, a.auc - b.auc, a.f1 - b.f1};
}

// Weights of the plaintext trainer: the mask, times class weights when
// reweighting.
Eigen::VectorXd train_weights(const Eigen::VectorXd& y,
                              const std::vector<std::uint8_t>& mask,
                              Balance balance) {
  Eigen::VectorXd m(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    m[i] = mask.empty() ? 1.0 : mask[static_cast<std::size_t>(i)];
  }
  if (balance != Balance::Reweight) return m;
  std::vector<std::size_t> on;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (m[i] != 0.0) on.push_back(static_cast<std::size_t>(i));
  }
  const Eigen::VectorXd w = learn::balance_weights(rows_of(y, on));
  for (std::size_t k = 0; k < on.size(); ++k) {
    m[static_cast<Eigen::Index>(on[k])] *= w[static_cast<Eigen::Index>(k)];
  }
  return m;
}

void run_theory(const RunConfig& cfg, const Eigen::MatrixXd& XA,
                const Eigen::MatrixXd& XB, const Eigen::VectorXd& y,
                RunReport& r) {
  const auto& o = cfg.theory;
  const std::size_t n = std::min<std::size_t>(o.rows, static_cast<std::size_t>(y.size()));
  if (n < 2) throw ConfigError("theory mode needs at least two rows");
  Eigen::MatrixXd X = hstack(XA, XB).topRows(static_cast<Eigen::Index>(n));
  const Eigen::VectorXd yy = y.head(static_cast<Eigen::Index>(n));
  const double xs = theory::max_row_norm(X);
  if (xs > 0) X /= xs;
  const double gamma = o.gamma > 0 ? o.gamma : 1.0;
  const auto f = theory::random_permutation(yy, o.T, o.rho, cfg.seed);
  const auto d_a = static_cast<std::size_t>(XA.cols());

  theory::CheckOptions opt;
  opt.alpha = o.alpha;
  opt.directions = o.directions;
  opt.seed = cfg.seed;
  const Eigen::MatrixXd I;
  const auto t1 = theory::check_theorem1(X, yy, d_a, f, gamma, I, opt);
  const auto im = theory::check_immunity(X, yy, d_a, f, gamma, I, o.kappa, opt);
  const auto gap = theory::check_loss_gap(X, yy, d_a, f, gamma, I, opt);
  const Eigen::VectorXd theta0 = learn::closed_form_minimizer(X, yy, gamma, I);
  const double bound = std::max(theta0.norm(), 1e-12);
  const auto gen = theory::generalization_terms(
      X, yy, d_a, f, gamma, I, o.alpha, o.delta,
      theory::taylor_lipschitz(X, bound), bound);

  std::ostringstream os;
  os << "rows=" << n << "\nd_anchor=" << d_a << "\nT=" << f.T()
     << "\nrho=" << f.rho() << "\ngamma=" << gamma << "\n";
  os << "[theorem1]\n" << theory::format(t1);
  os << "[immunity]\n" << theory::format(im);
  os << "[loss_gap]\n" << theory::format(gap);
  os << "[generalization]\n" << theory::format(gen);
  r.theory_report = os.str();
  r.assumptions_hold = t1.assumptions.hold();
}

}  // namespace

Mode parse_mode(const std::string& s) {
  if (s == "secure") return Mode::Secure;
  if (s == "plaintext") return Mode::Plaintext;
  if (s == "theory") return Mode::Theory;
  throw ConfigError("unknown mode '" + s + "'");
}

Balance parse_balance(const std::string& s) {
  if (s == "none") return Balance::None;
  if (s == "subsample") return Balance::Subsample;
  if (s == "reweight") return Balance::Reweight;
  throw ConfigError("unknown balancing '" + s + "'");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Secure: return "secure";
    case Mode::Plaintext: return "plaintext";
    case Mode::Theory: return "theory";
  }
  return "?";
}

std::string to_string(Balance b) {
  switch (b) {
    case Balance::None: return "none";
    case Balance::Subsample: return "subsample";
    case Balance::Reweight: return "reweight";
  }
  return "?";
}

RunConfig::RunConfig() {
  split.pi_columns = credit_pi_columns();
  clk.secret = "vflr-demo-secret";
  // About 60 bigrams per synthetic record: 10 bits each keeps filters near
  // half full.
  clk.k = 10;
  train.holdout = 50;
  train.max_epochs = 20;
  train.patience = 3;
}

void RunConfig::validate() const {
  if (!(typo_rate >= 0.0 && typo_rate <= 1.0) ||
      !(missing_rate >= 0.0 && missing_rate <= 1.0)) {
    throw ConfigError("corruption rates must lie in [0, 1]");
  }
  if (!(split.overlap >= 0.0 && split.overlap <= 1.0)) {
    throw ConfigError("overlap must lie in [0, 1]");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("match threshold must lie in [0, 1]");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  if (mode == Mode::Secure && balance == Balance::Reweight) {
    throw ConfigError("reweighting is only available in plaintext mode");
  }
  if (dataset.empty() && synthetic_rows < 10) {
    throw ConfigError("synthetic data needs at least 10 rows");
  }
}

RunReport run(const RunConfig& cfg) {
  cfg.validate();
  RunReport r;
  r.mode = cfg.mode;
  r.overlap = cfg.split.overlap;
  Stopwatch watch(r);

  const learn::CsvTable table =
      cfg.dataset.empty()
          ? synthetic_credit({cfg.synthetic_rows, 10, 0.07, cfg.seed})
          : learn::read_csv(cfg.dataset);
  SplitConfig split = cfg.split;
  if (split.features_a.empty() && split.features_b.empty()) {
    auto_feature_split(table, split);
  }
  split.seed = cfg.seed ^ 0x5b11u;
  split.validate(table);
  watch.lap("load");

  const std::size_t N = table.rows.size();
  const auto n_test = static_cast<std::size_t>(
      std::llround(cfg.test_fraction * static_cast<double>(N)));
  if (n_test == 0 || n_test >= N) throw ConfigError("test split is empty or total");
  const auto test_rows = learn::sample_holdout(N, n_test, cfg.seed ^ 0x7e57u);
  const auto pool = learn::complement(N, test_rows);

  VerticalSplit vs = vertical_split(table, pool, split);
  if (cfg.balance == Balance::Subsample) {
    const auto keep = learn::balance_by_subsampling(vs.a.y, cfg.seed ^ 0xba1u);
    ProviderView a;
    a.X = rows_of(vs.a.X, keep);
    a.y = rows_of(vs.a.y, keep);
    std::vector<std::string> ids;
    for (auto k : keep) {
      a.pi.push_back(vs.a.pi[k]);
      ids.push_back(vs.a_ids[k]);
    }
    vs.a = std::move(a);
    vs.a_ids = std::move(ids);
  }
  // Each provider scales its own columns.
  const auto std_a = learn::Standardizer::fit(vs.a.X);
  const auto std_b = learn::Standardizer::fit(vs.b.X);
  const Eigen::MatrixXd XA = with_intercept(std_a.transform(vs.a.X), cfg.intercept);
  const Eigen::MatrixXd XB = std_b.transform(vs.b.X);
  r.rows_a = static_cast<std::size_t>(XA.rows());
  r.rows_b = static_cast<std::size_t>(XB.rows());

  std::unordered_map<std::string, std::size_t> b_index;
  for (std::size_t j = 0; j < vs.b_ids.size(); ++j) b_index[vs.b_ids[j]] = j;
  // Shared entities, joined on the ground truth.
  std::vector<std::size_t> base_a, base_b;
  for (std::size_t i = 0; i < vs.a_ids.size(); ++i) {
    const auto it = b_index.find(vs.a_ids[i]);
    if (it == b_index.end()) continue;
    base_a.push_back(i);
    base_b.push_back(it->second);
  }
  r.common = base_a.size();
  watch.lap("split");

  // Test rows carry both blocks, joined on the true entity.
  const learn::LabelRule rule{split.positive_label};
  learn::CsvTable test_table;
  test_table.header = table.header;
  for (auto t : test_rows) test_table.rows.push_back(table.rows[t]);
  const auto test_a = learn::dataset_from_table(test_table, split.label, split.features_a, rule);
  const auto test_b = learn::dataset_from_table(test_table, split.label, split.features_b, rule);
  const Eigen::MatrixXd X_test = hstack(
      with_intercept(std_a.transform(test_a.X), cfg.intercept), std_b.transform(test_b.X));
  const Eigen::VectorXd& y_test = test_a.y;
  r.test_rows = n_test;

  if (cfg.mode == Mode::Theory) {
    run_theory(cfg, rows_of(XA, base_a), rows_of(XB, base_b),
               rows_of(vs.a.y, base_a), r);
    watch.lap("theory");
    return r;
  }

  // Entity resolution on the corrupted identifiers of B.
  linkage::ClkConfig clk = cfg.clk;
  if (clk.fields.empty()) clk.fields = split.pi_columns;
  const auto pi_b = corrupt_pi(vs.b.pi, cfg.typo_rate, cfg.missing_rate,
                               cfg.seed ^ 0xc0ffu, split.pi_columns);
  const auto clk_a = linkage::build_clks(vs.a.pi, clk);
  const auto clk_b = linkage::build_clks(pi_b, clk);
  watch.lap("clk");
  const auto lk = linkage::match(clk_a, clk_b, cfg.threshold, cfg.seed ^ 0x3a7cu);
  watch.lap("match");

  r.aligned = lk.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < lk.size(); ++i) {
    if (!lk.mask[i]) continue;
    ++r.matches;
    if (vs.a_ids[lk.sigma[i]] == vs.b_ids[lk.tau[i]]) {
      ++correct;
    } else {
      ++r.wrong_matches;
    }
  }
  r.matching_error = r.matches == 0 ? 0.0
                                    : static_cast<double>(r.wrong_matches) /
                                          static_cast<double>(r.matches);
  r.recall = r.common == 0 ? 1.0
                           : static_cast<double>(correct) /
                                 static_cast<double>(r.common);

  const Eigen::MatrixXd XA_al = rows_of(XA, lk.sigma);
  const Eigen::MatrixXd XB_al = rows_of(XB, lk.tau);
  const Eigen::VectorXd y_al = rows_of(vs.a.y, lk.sigma);

  // Baseline: A's rows in the same aligned order, each joined with B's row
  // of the same entity; rows without a shared entity are masked out.
  {
    Eigen::MatrixXd XB_true = Eigen::MatrixXd::Zero(XB_al.rows(), XB.cols());
    std::vector<std::uint8_t> truth(lk.size(), 0);
    for (std::size_t i = 0; i < lk.size(); ++i) {
      const auto it = b_index.find(vs.a_ids[lk.sigma[i]]);
      if (it == b_index.end()) continue;
      XB_true.row(static_cast<Eigen::Index>(i)) = XB.row(static_cast<Eigen::Index>(it->second));
      truth[i] = 1;
    }
    const auto res = learn::train_sag(hstack(XA_al, XB_true), y_al, cfg.train,
                                      train_weights(y_al, truth, cfg.balance));
    r.baseline_theta = res.theta;
    r.baseline = learn::evaluate(res.theta, X_test, y_test);
    watch.lap("baseline");
  }

  if (cfg.mode == Mode::Plaintext) {
    const auto res = learn::train_sag(hstack(XA_al, XB_al), y_al, cfg.train,
                                      train_weights(y_al, lk.mask, cfg.balance));
    r.theta = res.theta;
    r.epochs = res.epochs;
    r.early_stopped = res.early_stopped;
    watch.lap("train");
  } else {
    protocol::SessionConfig sc;
    sc.train = cfg.train;
    sc.key_bits = cfg.key_bits;
    sc.allow_insecure = cfg.allow_insecure;
    sc.session_id = cfg.seed;
    he::KeygenOptions ko;
    ko.bits = cfg.key_bits;
    ko.allow_insecure = cfg.allow_insecure;
    protocol::CoordinatorInput c{lk.mask, static_cast<std::size_t>(XA.cols()),
                                 static_cast<std::size_t>(XB.cols()),
                                 he::generate_keypair(ko)};
    watch.lap("keygen");
    protocol::Transcript transcript;
    const auto res = protocol::run_session(sc, std::move(c), {XA_al, y_al},
                                           {XB_al}, &transcript);
    watch.lap("train");
    r.aborted = res.aborted;
    r.abort_reason = res.abort_reason;
    r.audit = res.coordinator.audit;
    r.theta = res.coordinator.theta;
    r.epochs = res.coordinator.epochs;
    r.early_stopped = res.coordinator.early_stopped;

    const auto plan = learn::make_batch_plan(lk.size(), cfg.train);
    r.expected_gradient_ciphertexts = protocol::gradient_ciphertexts_per_epoch(
        plan.train.size(), plan.batches.size(), static_cast<std::size_t>(XA.cols()),
        static_cast<std::size_t>(XB.cols()));
    r.expected_loss_ciphertexts = protocol::loss_ciphertexts_per_epoch(cfg.train.holdout);
    r.gradient_ciphertexts = transcript.ciphertexts("gradient", 1);
    r.loss_ciphertexts = transcript.ciphertexts("loss", 1);
    r.transcript_bytes = transcript.bytes();

    const auto log = transcript.entries();
    protocol::SensitiveValues sv;
    for (const Eigen::MatrixXd* M : {&XA_al, &XB_al}) {
      for (Eigen::Index i = 0; i < M->size(); ++i) {
        const double v = M->data()[i];
        if (v != 0.0 && v != 1.0) sv.features.push_back(v);
      }
    }
    sv.mask.assign(lk.mask.begin(), lk.mask.end());
    sv.entity_ids = vs.a_ids;
    sv.entity_ids.insert(sv.entity_ids.end(), vs.b_ids.begin(), vs.b_ids.end());
    r.leak_findings = protocol::scan_for_leaks(log, sv).size();
    r.routing_findings = protocol::check_routing(log).size();
    watch.lap("audit");
    if (r.aborted) return r;
  }

  r.model = learn::evaluate(r.theta, X_test, y_test);
  r.delta = minus(r.model, r.baseline);
  watch.lap("evaluate");
  return r;
}

namespace {

class Kv {
 public:
  explicit Kv(std::ostringstream& os) : os_(os) {
    os_ << std::setprecision(10) << std::boolalpha;
  }
  template <typename T>
  Kv& operator()(const std::string& k, const T& v) {
    os_ << k << '=' << v << '\n';
    return *this;
  }

 private:
  std::ostringstream& os_;
};

std::string join(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << std::setprecision(10);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

std::string format_kv(const RunReport& r) {
  std::ostringstream os;
  Kv kv(os);
  kv("mode", to_string(r.mode));
  if (r.mode == Mode::Theory) {
    kv("assumptions_hold", r.assumptions_hold);
    os << r.theory_report;
  } else {
    kv("overlap", r.overlap)("rows_a", r.rows_a)("rows_b", r.rows_b)(
        "test_rows", r.test_rows)("common", r.common)("aligned", r.aligned)(
        "matches", r.matches)("wrong_matches", r.wrong_matches)(
        "matching_error", r.matching_error)("recall", r.recall);
    kv("accuracy", r.model.accuracy)("auc", r.model.auc)("f1", r.model.f1);
    kv("baseline_accuracy", r.baseline.accuracy)("baseline_auc", r.baseline.auc)(
        "baseline_f1", r.baseline.f1);
    kv("delta_accuracy", r.delta.accuracy)("delta_auc", r.delta.auc)(
        "delta_f1", r.delta.f1);
    kv("epochs", r.epochs)("early_stopped", r.early_stopped);
    kv("theta", join(r.theta))("baseline_theta", join(r.baseline_theta));
    if (r.mode == Mode::Secure) {
      kv("audit_batch", r.audit.batch)("audit_p_at_most_one", r.audit.p_at_most_one);
      kv("gradient_ciphertexts", r.gradient_ciphertexts)(
          "expected_gradient_ciphertexts", r.expected_gradient_ciphertexts)(
          "loss_ciphertexts", r.loss_ciphertexts)(
          "expected_loss_ciphertexts", r.expected_loss_ciphertexts)(
          "transcript_bytes", r.transcript_bytes)("leak_findings", r.leak_findings)(
          "routing_findings", r.routing_findings);
      kv("aborted", r.aborted);
      if (r.aborted) kv("abort_reason", r.abort_reason);
    }
  }
  for (const auto& [phase, s] : r.timings) kv("time_" + phase, s);
  return os.str();
}

std::string format_text(const RunReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "mode: " << to_string(r.mode) << "\n";
  if (r.mode == Mode::Theory) {
    os << "assumptions: " << (r.assumptions_hold ? "hold" : "FAIL") << "\n"
       << r.theory_report;
  } else {
    os << "shared fraction: " << r.overlap << "  (A rows " << r.rows_a
       << ", B rows " << r.rows_b << ", shared " << r.common << ")\n";
    os << "matching: " << r.matches << " pairs, " << r.wrong_matches
       << " wrong (" << 100.0 * r.matching_error << "%), recall "
       << 100.0 * r.recall << "%\n";
    os << "              acc     auc      f1\n";
    auto line = [&](const char* name, const learn::Metrics& m) {
      os << name << std::setw(8) << m.accuracy << std::setw(8) << m.auc
         << std::setw(8) << m.f1 << "\n";
    };
    line(r.mode == Mode::Secure ? "secure    " : "plaintext ", r.model);
    line("baseline  ", r.baseline);
    line("delta     ", r.delta);
    os << "epochs: " << r.epochs << (r.early_stopped ? " (early stop)" : "") << "\n";
    if (r.mode == Mode::Secure) {
      os << std::setprecision(6) << "batch audit: P[<=1 match in a batch of "
         << r.audit.batch << "] = " << r.audit.p_at_most_one << "\n";
      os << "ciphertexts per epoch: gradient " << r.gradient_ciphertexts
         << " (expected " << r.expected_gradient_ciphertexts << "), loss "
         << r.loss_ciphertexts << " (expected " << r.expected_loss_ciphertexts
         << ")\n";
      os << "transcript: " << r.transcript_bytes << " bytes, "
         << r.leak_findings << " leak findings, " << r.routing_findings
         << " routing findings\n";
      if (r.aborted) os << "ABORTED: " << r.abort_reason << "\n";
    }
  }
  os << std::setprecision(3);
  for (const auto& [phase, s] : r.timings) {
    os << "time " << phase << ": " << s << " s\n";
  }
  return os.str();
}

}  // namespace vflr::pipeline

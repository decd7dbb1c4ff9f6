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

// vflr: command-line front end for key generation, identifier hashing,
// matching, training and the end-to-end experiment.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vflr/common/error.hpp"
#include "vflr/he/paillier.hpp"
#include "vflr/learn/dataset.hpp"
#include "vflr/learn/loss.hpp"
#include "vflr/learn/metrics.hpp"
#include "vflr/learn/sag.hpp"
#include "vflr/linkage/clk.hpp"
#include "vflr/linkage/match.hpp"
#include "vflr/pipeline/run.hpp"
#include "vflr/protocol/session.hpp"

namespace {

using namespace vflr;

enum Exit { kOk = 0, kUsage = 1, kAbort = 2, kAssumptions = 3 };

std::string to_hex(const Bytes& b) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(2 * b.size());
  for (auto c : b) {
    s.push_back(digits[c >> 4]);
    s.push_back(digits[c & 15]);
  }
  return s;
}

Bytes from_hex(const std::string& s) {
  if (s.size() % 2) throw IoError("odd-length hex string");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw IoError("bad hex digit");
  };
  Bytes out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
  }
  return out;
}

void write_file(const std::string& path, const Bytes& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << text;
}

std::vector<linkage::Clk> read_clks(const std::string& path) {
  const auto t = learn::read_csv(path);
  const auto col = t.column("clk");
  std::vector<linkage::Clk> out;
  for (const auto& row : t.rows) out.push_back(linkage::Clk::deserialize(from_hex(row[col])));
  return out;
}

struct Aligned {
  std::vector<std::size_t> a, b;
  std::vector<std::uint8_t> mask;
};

Aligned read_linkage(const std::string& path) {
  const auto t = learn::read_csv(path);
  const auto ca = t.column("a"), cb = t.column("b"), cm = t.column("mask");
  Aligned out;
  for (const auto& row : t.rows) {
    out.a.push_back(std::stoul(row[ca]));
    out.b.push_back(std::stoul(row[cb]));
    out.mask.push_back(static_cast<std::uint8_t>(std::stoul(row[cm])));
  }
  return out;
}

learn::Dataset load(const std::string& path, const std::string& label,
                    std::vector<std::string> features, const std::string& positive) {
  const auto t = learn::read_csv(path);
  if (features.empty()) {
    for (const auto& c : t.header) {
      if (c != label) features.push_back(c);
    }
  }
  if (label.empty()) {
    // Feature-only view: attach a constant dummy label.
    learn::CsvTable copy = t;
    copy.header.push_back("__label");
    for (auto& row : copy.rows) row.push_back("1");
    return learn::dataset_from_table(copy, "__label", features, {positive});
  }
  return learn::dataset_from_table(t, label, features, {positive});
}

Eigen::MatrixXd reorder(const Eigen::MatrixXd& X, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= static_cast<std::size_t>(X.rows())) throw RangeError("linkage row out of range");
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

std::string theta_csv(const Eigen::VectorXd& theta) {
  std::ostringstream os;
  os.precision(17);
  os << "index,theta\n";
  for (Eigen::Index i = 0; i < theta.size(); ++i) os << i << ',' << theta[i] << '\n';
  return os.str();
}

void add_train_options(CLI::App* app, learn::TrainConfig& t) {
  app->add_option("--eta", t.eta, "step size");
  app->add_option("--gamma", t.gamma, "ridge strength");
  app->add_option("--batch", t.batch, "mini-batch size");
  app->add_option("--holdout", t.holdout, "hold-out rows for early stopping");
  app->add_option("--patience", t.patience);
  app->add_option("--min-delta", t.min_delta);
  app->add_option("--epochs", t.max_epochs, "maximum epochs");
  app->add_option("--train-seed", t.seed, "seed of the batch plan");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertically partitioned logistic regression over encrypted data"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML config file; flags override it");

  // keygen
  unsigned bits = he::kMinSecureKeyBits;
  bool insecure = false;
  std::string pk_path = "public.key", sk_path = "private.key";
  auto* keygen = app.add_subcommand("keygen", "generate a Paillier key pair");
  keygen->add_option("--bits", bits, "modulus size");
  keygen->add_flag("--allow-insecure", insecure, "permit keys below 1024 bits");
  keygen->add_option("--public", pk_path);
  keygen->add_option("--private", sk_path);

  // clk
  std::string clk_in, clk_out = "-";
  linkage::ClkConfig clk_cfg;
  auto* clk = app.add_subcommand("clk", "hash identifier columns into CLKs");
  clk->add_option("--input", clk_in, "CSV with identifier columns")->required();
  clk->add_option("--fields", clk_cfg.fields, "identifier columns")->delimiter(',')->required();
  clk->add_option("--secret", clk_cfg.secret, "shared hashing secret")->required();
  clk->add_option("--length", clk_cfg.l, "filter bits");
  clk->add_option("--hashes", clk_cfg.k, "bits per n-gram");
  clk->add_option("--ngram", clk_cfg.n, "n-gram size");
  clk->add_option("--out", clk_out);

  // match
  std::string match_a, match_b, match_out = "-";
  double match_threshold = 0.8;
  std::uint64_t match_seed = 0;
  auto* match = app.add_subcommand("match", "greedy Dice matching of two CLK files");
  match->add_option("--a", match_a, "provider A CLKs")->required();
  match->add_option("--b", match_b, "provider B CLKs")->required();
  match->add_option("--threshold", match_threshold);
  match->add_option("--seed", match_seed, "seed of the aligned row order");
  match->add_option("--out", match_out);

  // train-plain
  std::string tp_in, tp_label, tp_positive, tp_test, tp_out = "-", tp_trace, tp_linkage;
  std::vector<std::string> tp_features;
  std::string tp_loss = "taylor";
  learn::TrainConfig tp_cfg;
  auto* train_plain = app.add_subcommand("train-plain", "plaintext SAG training");
  train_plain->add_option("--input", tp_in)->required();
  train_plain->add_option("--label", tp_label)->required();
  train_plain->add_option("--positive", tp_positive, "label value of the positive class");
  train_plain->add_option("--features", tp_features)->delimiter(',');
  train_plain->add_option("--mask", tp_linkage, "linkage CSV whose mask column weights rows");
  train_plain->add_option("--loss", tp_loss)->check(CLI::IsMember({"taylor", "logistic"}));
  train_plain->add_option("--test", tp_test, "CSV to evaluate on");
  train_plain->add_option("--trace", tp_trace, "write the loss trace here");
  train_plain->add_option("--out", tp_out);
  add_train_options(train_plain, tp_cfg);

  // train-secure
  std::string ts_role = "all", ts_a, ts_b, ts_label, ts_positive, ts_linkage, ts_out = "-";
  std::vector<std::string> ts_fa, ts_fb;
  std::size_t ts_da = 0, ts_db = 0;
  protocol::SessionConfig ts_cfg;
  ts_cfg.train.holdout = 50;
  auto* train_secure = app.add_subcommand("train-secure", "run the three-party protocol");
  train_secure->add_option("--role", ts_role, "all runs every party in-process")
      ->check(CLI::IsMember({"all", "coordinator", "a", "b"}));
  train_secure->add_option("--input-a", ts_a, "provider A CSV");
  train_secure->add_option("--input-b", ts_b, "provider B CSV");
  train_secure->add_option("--label", ts_label);
  train_secure->add_option("--positive", ts_positive);
  train_secure->add_option("--features-a", ts_fa)->delimiter(',');
  train_secure->add_option("--features-b", ts_fb)->delimiter(',');
  train_secure->add_option("--d-a", ts_da, "coordinator: A's feature count");
  train_secure->add_option("--d-b", ts_db, "coordinator: B's feature count");
  train_secure->add_option("--linkage", ts_linkage, "output of `vflr match`")->required();
  train_secure->add_option("--bits", ts_cfg.key_bits);
  train_secure->add_flag("--allow-insecure", ts_cfg.allow_insecure);
  train_secure->add_option("--audit-ceiling", ts_cfg.audit_ceiling);
  train_secure->add_option("--session", ts_cfg.session_id);
  train_secure->add_option("--out", ts_out);
  add_train_options(train_secure, ts_cfg.train);

  // run / theory share the experiment configuration.
  pipeline::RunConfig rc;
  std::string mode = "secure", balance = "subsample", format = "text", report_out = "-";
  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--dataset", rc.dataset, "CSV; synthetic credit data when absent");
    sub->add_option("--rows", rc.synthetic_rows, "synthetic rows");
    sub->add_option("--id-column", rc.split.id_column);
    sub->add_option("--label", rc.split.label);
    sub->add_option("--positive", rc.split.positive_label);
    sub->add_option("--pi", rc.split.pi_columns, "identifier columns")->delimiter(',');
    sub->add_option("--features-a", rc.split.features_a)->delimiter(',');
    sub->add_option("--features-b", rc.split.features_b)->delimiter(',');
    sub->add_option("--overlap", rc.split.overlap, "shared entity fraction");
    sub->add_option("--typo-rate", rc.typo_rate);
    sub->add_option("--missing-rate", rc.missing_rate);
    sub->add_option("--secret", rc.clk.secret);
    sub->add_option("--threshold", rc.threshold, "Dice threshold");
    sub->add_option("--bits", rc.key_bits);
    sub->add_flag("--allow-insecure", rc.allow_insecure);
    sub->add_option("--balance", balance)->check(CLI::IsMember({"none", "subsample", "reweight"}));
    sub->add_option("--test-fraction", rc.test_fraction);
    sub->add_option("--intercept", rc.intercept);
    sub->add_option("--seed", rc.seed);
    sub->add_option("--format", format)->check(CLI::IsMember({"text", "kv"}));
    sub->add_option("--out", report_out);
    sub->add_option("--theory-rows", rc.theory.rows);
    sub->add_option("--T", rc.theory.T, "elementary transpositions");
    sub->add_option("--rho", rc.theory.rho, "class-mismatch fraction");
    sub->add_option("--alpha", rc.theory.alpha);
    sub->add_option("--theory-gamma", rc.theory.gamma, "0 = smallest calibrated value");
    sub->add_option("--kappa", rc.theory.kappa);
    sub->add_option("--delta", rc.theory.delta);
    sub->add_option("--directions", rc.theory.directions);
    add_train_options(sub, rc.train);
  };
  auto* run = app.add_subcommand("run", "end-to-end experiment");
  add_run_options(run);
  run->add_option("--mode", mode)->check(CLI::IsMember({"secure", "plaintext", "theory"}));
  auto* theory = app.add_subcommand("theory", "bound checks on a random linkage error");
  add_run_options(theory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_parse = app.exit(e);
    return rc_parse == 0 ? kOk : kUsage;
  }

  try {
    if (*keygen) {
      he::KeygenOptions opt;
      opt.bits = bits;
      opt.allow_insecure = insecure;
      const auto kp = he::generate_keypair(opt);
      write_file(pk_path, kp.public_key.serialize());
      write_file(sk_path, kp.private_key.serialize());
      std::cout << "bits=" << kp.public_key.bits() << "\nkey_id=" << kp.public_key.key_id() << "\n";
      return kOk;
    }
    if (*clk) {
      const auto t = learn::read_csv(clk_in);
      std::vector<linkage::Record> recs;
      for (const auto& row : t.rows) {
        linkage::Record r;
        for (const auto& f : clk_cfg.fields) r[f] = row[t.column(f)];
        recs.push_back(std::move(r));
      }
      const auto clks = linkage::build_clks(recs, clk_cfg);
      std::ostringstream os;
      os << "row,clk\n";
      for (std::size_t i = 0; i < clks.size(); ++i) os << i << ',' << to_hex(clks[i].serialize()) << '\n';
      write_text(clk_out, os.str());
      return kOk;
    }
    if (*match) {
      const auto a = read_clks(match_a), b = read_clks(match_b);
      const auto lk = linkage::match(a, b, match_threshold, match_seed);
      std::ostringstream os;
      os.precision(6);
      os << "row,a,b,mask,score\n";
      for (std::size_t i = 0; i < lk.size(); ++i) {
        os << i << ',' << lk.sigma[i] << ',' << lk.tau[i] << ',' << int(lk.mask[i]) << ','
           << lk.scores[i] << '\n';
      }
      write_text(match_out, os.str());
      std::cerr << "matched " << lk.matches() << " of " << lk.size() << " aligned rows\n";
      return kOk;
    }
    if (*train_plain) {
      tp_cfg.loss = tp_loss == "logistic" ? learn::LossKind::Logistic : learn::LossKind::Taylor;
      auto ds = load(tp_in, tp_label, tp_features, tp_positive);
      if (tp_features.empty()) tp_features = ds.feature_names;
      Eigen::VectorXd m;
      if (!tp_linkage.empty()) {
        const auto lk = read_linkage(tp_linkage);
        if (lk.mask.size() != ds.rows()) throw DimensionError("mask length differs from row count");
        m.resize(static_cast<Eigen::Index>(lk.mask.size()));
        for (std::size_t i = 0; i < lk.mask.size(); ++i) m[static_cast<Eigen::Index>(i)] = lk.mask[i];
      }
      const auto res = learn::train_sag(ds.X, ds.y, tp_cfg, m);
      write_text(tp_out, theta_csv(res.theta));
      if (!tp_trace.empty()) write_text(tp_trace, learn::format_trace_csv(res.trace));
      if (!tp_test.empty()) {
        const auto test = load(tp_test, tp_label, tp_features, tp_positive);
        const auto mt = learn::evaluate(res.theta, test.X, test.y);
        std::cerr << "accuracy=" << mt.accuracy << "\nauc=" << mt.auc << "\nf1=" << mt.f1 << "\n";
      }
      return kOk;
    }
    if (*train_secure) {
      const auto lk = read_linkage(ts_linkage);
      protocol::CoordinatorInput c;
      protocol::ProviderAInput a;
      protocol::ProviderBInput b;
      const bool all = ts_role == "all";
      if (all || ts_role == "a") {
        if (ts_a.empty() || ts_label.empty()) throw ConfigError("provider A needs --input-a and --label");
        const auto ds = load(ts_a, ts_label, ts_fa, ts_positive);
        a.X = reorder(ds.X, lk.a);
        a.y.resize(a.X.rows());
        for (std::size_t i = 0; i < lk.a.size(); ++i) a.y[static_cast<Eigen::Index>(i)] = ds.y[static_cast<Eigen::Index>(lk.a[i])];
        ts_da = static_cast<std::size_t>(a.X.cols());
      }
      if (all || ts_role == "b") {
        if (ts_b.empty()) throw ConfigError("provider B needs --input-b");
        const auto ds = load(ts_b, "", ts_fb, "");
        b.X = reorder(ds.X, lk.b);
        ts_db = static_cast<std::size_t>(b.X.cols());
      }
      c.mask = lk.mask;
      c.d_a = ts_da;
      c.d_b = ts_db;
      if (all) {
        const auto res = protocol::run_session(ts_cfg, std::move(c), std::move(a), std::move(b));
        if (res.aborted) {
          std::cerr << "aborted: " << res.abort_reason << "\n";
          return kAbort;
        }
        write_text(ts_out, theta_csv(res.coordinator.theta));
        std::cerr << learn::format_trace_csv(res.coordinator.trace);
        return kOk;
      }
      const auto topo = protocol::topology_from_env();
      if (ts_role == "coordinator") {
        if (ts_da == 0 || ts_db == 0) throw ConfigError("coordinator needs --d-a and --d-b");
        auto links = protocol::connect_tcp(protocol::Role::Coordinator, topo);
        protocol::Coordinator party(ts_cfg, std::move(c));
        party.run(*links.first, *links.second);
        write_text(ts_out, theta_csv(party.result().theta));
      } else if (ts_role == "a") {
        auto links = protocol::connect_tcp(protocol::Role::ProviderA, topo);
        protocol::ProviderA party(ts_cfg, std::move(a));
        party.run(*links.first, *links.second);
      } else {
        auto links = protocol::connect_tcp(protocol::Role::ProviderB, topo);
        protocol::ProviderB party(ts_cfg, std::move(b));
        party.run(*links.first, *links.second);
      }
      return kOk;
    }
    if (*run || *theory) {
      rc.mode = *theory ? pipeline::Mode::Theory : pipeline::parse_mode(mode);
      rc.balance = pipeline::parse_balance(balance);
      const auto report = pipeline::run(rc);
      write_text(report_out, format == "kv" ? pipeline::format_kv(report)
                                            : pipeline::format_text(report));
      if (report.aborted) return kAbort;
      if (rc.mode == pipeline::Mode::Theory && !report.assumptions_hold) return kAssumptions;
      return kOk;
    }
  } catch (const protocol::PeerAborted& e) {
    std::cerr << "aborted by peer: " << e.what() << "\n";
    return kAbort;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol abort: " << e.what() << "\n";
    return kAbort;
  } catch (const TransportError& e) {
    std::cerr << "transport failure: " << e.what() << "\n";
    return kAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

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

#ifndef VFLR_PIPELINE_RUN_HPP_
#define VFLR_PIPELINE_RUN_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vflr/learn/metrics.hpp"
#include "vflr/learn/sag.hpp"
#include "vflr/linkage/clk.hpp"
#include "vflr/pipeline/data.hpp"
#include "vflr/protocol/audit.hpp"

namespace vflr::pipeline {

enum class Mode { Secure, Plaintext, Theory };
enum class Balance { None, Subsample, Reweight };

Mode parse_mode(const std::string& s);
Balance parse_balance(const std::string& s);
std::string to_string(Mode m);
std::string to_string(Balance b);

struct TheoryOptions {
  std::size_t rows = 50;
  std::size_t T = 4;
  double rho = 0.5;
  double alpha = 0.5;
  double gamma = 0.0;  // 0 = smallest calibrated value
  double kappa = 0.5;
  double delta = 0.05;
  std::size_t directions = 10000;
};

struct RunConfig {
  std::string dataset;  // empty = synthetic credit data
  std::size_t synthetic_rows = 5000;
  SplitConfig split;
  double typo_rate = 0.05;
  double missing_rate = 0.02;
  linkage::ClkConfig clk;  // empty fields = the identifier columns
  double threshold = 0.8;
  learn::TrainConfig train;
  unsigned key_bits = 1024;
  bool allow_insecure = false;
  Mode mode = Mode::Secure;
  Balance balance = Balance::Subsample;
  double test_fraction = 0.2;
  bool intercept = true;
  std::uint64_t seed = 1;
  TheoryOptions theory;

  RunConfig();
  void validate() const;
};

struct RunReport {
  Mode mode = Mode::Secure;
  double overlap = 1.0;
  std::size_t rows_a = 0;
  std::size_t rows_b = 0;
  std::size_t test_rows = 0;
  std::size_t common = 0;       // A rows whose entity B also holds
  std::size_t aligned = 0;
  std::size_t matches = 0;      // mask ones
  std::size_t wrong_matches = 0;
  double matching_error = 0.0;  // wrong_matches / matches
  double recall = 0.0;          // correct matches / common

  learn::Metrics model;
  learn::Metrics baseline;
  learn::Metrics delta;  // model - baseline, percentage points
  std::size_t epochs = 0;
  bool early_stopped = false;
  Eigen::VectorXd theta;
  Eigen::VectorXd baseline_theta;

  // Secure mode only.
  protocol::BatchAudit audit;
  std::size_t gradient_ciphertexts = 0;  // observed, first epoch
  std::size_t expected_gradient_ciphertexts = 0;
  std::size_t loss_ciphertexts = 0;
  std::size_t expected_loss_ciphertexts = 0;
  std::size_t transcript_bytes = 0;
  std::size_t leak_findings = 0;
  std::size_t routing_findings = 0;
  bool aborted = false;
  std::string abort_reason;

  // Theory mode only.
  bool assumptions_hold = true;
  std::string theory_report;

  std::vector<std::pair<std::string, double>> timings;  // seconds
};

RunReport run(const RunConfig& cfg);

std::string format_text(const RunReport& r);
std::string format_kv(const RunReport& r);

}  // namespace vflr::pipeline

#endif  // VFLR_PIPELINE_RUN_HPP_

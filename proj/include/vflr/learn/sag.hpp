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

#ifndef VFLR_LEARN_SAG_HPP_
#define VFLR_LEARN_SAG_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vflr/common/error.hpp"

namespace vflr::learn {

enum class LossKind { Taylor, Logistic };

struct TrainConfig {
  double eta = 0.05;
  // The step adds 2 gamma Gamma theta, so the defaults give 0.01 theta.
  double gamma = 0.005;
  Eigen::MatrixXd Gamma;  // empty = identity
  std::size_t batch = 32;
  std::size_t holdout = 0;
  std::size_t patience = 5;
  double min_delta = 1e-6;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::Taylor;

  // Throws ConfigError.
  void validate(std::size_t n) const;
};

struct TraceRow {
  std::size_t epoch = 0;
  double train_taylor = std::numeric_limits<double>::quiet_NaN();
  double holdout_taylor = std::numeric_limits<double>::quiet_NaN();
  double holdout_logistic = std::numeric_limits<double>::quiet_NaN();
};
using LossTrace = std::vector<TraceRow>;

// epoch,train_taylor,holdout_taylor,holdout_logistic
std::string format_trace_csv(const LossTrace& trace);

class DivergenceError : public SolverError {
 public:
  DivergenceError(const std::string& what, LossTrace trace)
      : SolverError(what), trace_(std::move(trace)) {}
  const LossTrace& trace() const { return trace_; }

 private:
  LossTrace trace_;
};

// Stops after `patience` consecutive values that fail to beat the best by
// more than min_delta. Non-finite values throw DivergenceError.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_delta)
      : patience_(patience), min_delta_(min_delta) {}
  bool update(double loss, const LossTrace& trace = {});
  double best() const { return best_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
};

// Hold-out rows, the remaining training rows, and sequential batches of
// training rows (the last one may be short).
struct BatchPlan {
  std::vector<std::size_t> holdout;
  std::vector<std::size_t> train;
  std::vector<std::vector<std::size_t>> batches;
};
BatchPlan make_batch_plan(std::size_t n, const TrainConfig& cfg);
std::vector<std::size_t> batch_sizes(std::size_t n_train, std::size_t batch);

// SAG with one memory slot per batch. Slots hold unscaled batch sums; the
// direction is their total over the number of training rows.
class Sag {
 public:
  Sag(const TrainConfig& cfg, Eigen::Index d, std::vector<std::size_t> sizes);

  // theta <- theta - eta (direction + 2 gamma Gamma theta)
  void step(Eigen::VectorXd& theta, std::size_t b,
            const Eigen::VectorXd& batch_sum);
  std::size_t num_batches() const { return sizes_.size(); }
  std::size_t batch_size(std::size_t b) const { return sizes_.at(b); }
  std::size_t train_rows() const { return n_train_; }

 private:
  double eta_;
  double gamma_;
  Eigen::MatrixXd Gamma_;
  std::vector<std::size_t> sizes_;
  std::size_t n_train_ = 0;
  std::vector<Eigen::VectorXd> memory_;
  Eigen::VectorXd total_;
};

struct TrainResult {
  Eigen::VectorXd theta;
  LossTrace trace;
  std::size_t epochs = 0;
  bool early_stopped = false;
};

// Rows of X are already aligned; m weights each row (all ones when empty).
// Holds out cfg.holdout rows for early stopping.
TrainResult train_sag(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const TrainConfig& cfg, const Eigen::VectorXd& m = {});

}  // namespace vflr::learn

#endif  // VFLR_LEARN_SAG_HPP_

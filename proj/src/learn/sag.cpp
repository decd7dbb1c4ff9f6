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

#include "vflr/learn/sag.hpp"

#include <cmath>
#include <sstream>

#include "vflr/learn/dataset.hpp"
#include "vflr/learn/loss.hpp"

namespace vflr::learn {

void TrainConfig::validate(std::size_t n) const {
  if (!(eta > 0)) throw ConfigError("learning rate must be positive");
  if (!(gamma >= 0)) throw ConfigError("gamma must be non-negative");
  if (Gamma.size() != 0) {
    if (Gamma.rows() != Gamma.cols()) throw ConfigError("Gamma must be square");
    if (!Gamma.isApprox(Gamma.transpose(), 1e-12)) {
      throw ConfigError("Gamma must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gamma);
    if (es.eigenvalues().minCoeff() < -1e-12) {
      throw ConfigError("Gamma must be positive semi-definite");
    }
  }
  if (holdout >= n) throw ConfigError("hold-out must leave training rows");
  if (batch == 0 || batch > n - holdout) {
    throw ConfigError("batch size must lie in [1, training rows]");
  }
  if (!(min_delta >= 0)) throw ConfigError("min_delta must be non-negative");
}

std::string format_trace_csv(const LossTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_taylor,holdout_taylor,holdout_logistic\n";
  for (const auto& r : trace) {
    out << r.epoch << ',' << r.train_taylor << ',' << r.holdout_taylor << ','
        << r.holdout_logistic << '\n';
  }
  return out.str();
}

bool EarlyStopping::update(double loss, const LossTrace& trace) {
  if (!std::isfinite(loss)) {
    throw DivergenceError("loss became non-finite", trace);
  }
  if (loss < best_ - min_delta_) {
    best_ = loss;
    stale_ = 0;
    return false;
  }
  return ++stale_ >= patience_;
}

std::vector<std::size_t> batch_sizes(std::size_t n_train, std::size_t batch) {
  if (batch == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> out;
  for (std::size_t start = 0; start < n_train; start += batch) {
    out.push_back(std::min(batch, n_train - start));
  }
  return out;
}

BatchPlan make_batch_plan(std::size_t n, const TrainConfig& cfg) {
  cfg.validate(n);
  BatchPlan plan;
  plan.holdout = sample_holdout(n, cfg.holdout, cfg.seed);
  plan.train = complement(n, plan.holdout);
  std::size_t pos = 0;
  for (auto size : batch_sizes(plan.train.size(), cfg.batch)) {
    plan.batches.emplace_back(plan.train.begin() + static_cast<long>(pos),
                              plan.train.begin() + static_cast<long>(pos + size));
    pos += size;
  }
  return plan;
}

Sag::Sag(const TrainConfig& cfg, Eigen::Index d, std::vector<std::size_t> sizes)
    : eta_(cfg.eta),
      gamma_(cfg.gamma),
      Gamma_(resolve_gamma(cfg.Gamma, d)),
      sizes_(std::move(sizes)),
      memory_(sizes_.size(), Eigen::VectorXd::Zero(d)),
      total_(Eigen::VectorXd::Zero(d)) {
  for (auto s : sizes_) n_train_ += s;
  if (n_train_ == 0) throw ConfigError("SAG needs at least one training row");
}

void Sag::step(Eigen::VectorXd& theta, std::size_t b,
               const Eigen::VectorXd& batch_sum) {
  if (b >= memory_.size()) throw RangeError("batch index out of range");
  if (batch_sum.size() != theta.size()) {
    throw DimensionError("gradient length does not match model");
  }
  total_ += batch_sum - memory_[b];
  memory_[b] = batch_sum;
  const Eigen::VectorXd direction = total_ / static_cast<double>(n_train_);
  theta -= eta_ * (direction + 2 * gamma_ * (Gamma_ * theta));
}

TrainResult train_sag(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const TrainConfig& cfg, const Eigen::VectorXd& m) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (y.size() != X.rows()) throw DimensionError("label count != row count");
  const Eigen::VectorXd mask =
      m.size() == 0 ? Eigen::VectorXd::Ones(X.rows()) : m;
  if (mask.size() != X.rows()) throw DimensionError("mask length != row count");
  const BatchPlan plan = make_batch_plan(n, cfg);

  auto gather = [&](const std::vector<std::size_t>& rows, Eigen::MatrixXd& Xs,
                    Eigen::VectorXd& ys, Eigen::VectorXd& ms) {
    const auto k = static_cast<Eigen::Index>(rows.size());
    Xs.resize(k, X.cols());
    ys.resize(k);
    ms.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
      Xs.row(i) = X.row(r);
      ys[i] = y[r];
      ms[i] = mask[r];
    }
  };
  std::vector<Eigen::MatrixXd> bx(plan.batches.size());
  std::vector<Eigen::VectorXd> by(plan.batches.size()), bm(plan.batches.size());
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    gather(plan.batches[b], bx[b], by[b], bm[b]);
  }
  Eigen::MatrixXd Xt, Xh;
  Eigen::VectorXd yt, mt, yh, mh;
  gather(plan.train, Xt, yt, mt);
  gather(plan.holdout, Xh, yh, mh);

  std::vector<std::size_t> sizes;
  for (const auto& b : plan.batches) sizes.push_back(b.size());
  Sag sag(cfg, X.cols(), sizes);
  EarlyStopping stopper(cfg.patience, cfg.min_delta);

  TrainResult result;
  result.theta = Eigen::VectorXd::Zero(X.cols());
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
      const Eigen::VectorXd g =
          cfg.loss == LossKind::Taylor
              ? masked_gradient_sum(result.theta, bx[b], by[b], bm[b])
              : masked_logistic_gradient_sum(result.theta, bx[b], by[b], bm[b]);
      sag.step(result.theta, b, g);
    }
    TraceRow row;
    row.epoch = epoch;
    row.train_taylor = masked_taylor_loss(result.theta, Xt, yt, mt);
    if (!plan.holdout.empty()) {
      row.holdout_taylor = masked_holdout_loss(result.theta, Xh, yh, mh);
      row.holdout_logistic = masked_logistic_loss(result.theta, Xh, yh, mh);
    }
    result.trace.push_back(row);
    result.epochs = epoch;
    if (!result.theta.allFinite() || !std::isfinite(row.train_taylor)) {
      throw DivergenceError("model diverged", result.trace);
    }
    if (!plan.holdout.empty()) {
      const double monitored = cfg.loss == LossKind::Taylor
                                   ? row.holdout_taylor
                                   : row.holdout_logistic;
      if (stopper.update(monitored, result.trace)) {
        result.early_stopped = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace vflr::learn

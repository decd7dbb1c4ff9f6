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

#include "vflr/learn/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "vflr/common/error.hpp"

namespace vflr::learn {

double auc_percent(const Eigen::VectorXd& scores, const Eigen::VectorXd& y) {
  if (scores.size() != y.size()) throw DimensionError("scores/labels mismatch");
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] <
           scores[static_cast<Eigen::Index>(b)];
  });
  double rank_sum_pos = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[static_cast<Eigen::Index>(order[j])] ==
                        scores[static_cast<Eigen::Index>(order[i])]) {
      ++j;
    }
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2;
    for (std::size_t k = i; k < j; ++k) {
      if (y[static_cast<Eigen::Index>(order[k])] > 0) {
        rank_sum_pos += midrank;
        n_pos += 1;
      }
    }
    i = j;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw RangeError("AUC is undefined for a single-class test set");
  }
  const double u = rank_sum_pos - n_pos * (n_pos + 1) / 2;
  return 100.0 * u / (n_pos * n_neg);
}

Metrics evaluate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y) {
  if (X.rows() == 0) throw DimensionError("empty test set");
  if (theta.size() != X.cols() || y.size() != X.rows()) {
    throw DimensionError("evaluate: shape mismatch");
  }
  const Eigen::VectorXd s = X * theta;
  double correct = 0, tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const bool pred = s[i] > 0;
    const bool truth = y[i] > 0;
    correct += pred == truth;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
  }
  Metrics m;
  m.accuracy = 100.0 * correct / static_cast<double>(s.size());
  m.auc = auc_percent(s, y);
  m.f1 = tp == 0 ? 0.0 : 100.0 * 2 * tp / (2 * tp + fp + fn);
  return m;
}

}  // namespace vflr::learn

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

#ifndef VFLR_LEARN_METRICS_HPP_
#define VFLR_LEARN_METRICS_HPP_

#include <Eigen/Dense>

namespace vflr::learn {

// All in percent.
struct Metrics {
  double accuracy = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
};

// Mann-Whitney statistic with midranks for ties. Throws RangeError when only
// one class is present.
double auc_percent(const Eigen::VectorXd& scores, const Eigen::VectorXd& y);

// Predicts +1 when theta.x > 0.
Metrics evaluate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y);

}  // namespace vflr::learn

#endif  // VFLR_LEARN_METRICS_HPP_

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

#ifndef VFLR_LEARN_LOSS_HPP_
#define VFLR_LEARN_LOSS_HPP_

#include <Eigen/Dense>

namespace vflr::learn {

// Gamma arguments may be empty (0x0), meaning the identity.

// (1/n) sum log(1 + exp(-y theta.x)), evaluated stably.
double logistic_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                     const Eigen::VectorXd& y);

// (1/n) sum [log 2 - y z / 2 + z^2 / 8] + gamma theta' Gamma theta.
double taylor_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y, double gamma = 0.0,
                   const Eigen::MatrixXd& Gamma = {});

// (1/n) sum (theta.x / 4 - y / 2) x. No ridge term.
Eigen::VectorXd taylor_gradient(const Eigen::VectorXd& theta,
                                const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y);

// Gradient of taylor_loss including the ridge term.
Eigen::VectorXd taylor_objective_gradient(const Eigen::VectorXd& theta,
                                          const Eigen::MatrixXd& X,
                                          const Eigen::VectorXd& y,
                                          double gamma,
                                          const Eigen::MatrixXd& Gamma = {});

// sum m_i (theta.x_i / 4 - y_i / 2) x_i, unscaled.
Eigen::VectorXd masked_gradient_sum(const Eigen::VectorXd& theta,
                                    const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& m);

// sum m_i log(1 + exp(-y_i theta.x_i)) x-gradient, unscaled.
Eigen::VectorXd masked_logistic_gradient_sum(const Eigen::VectorXd& theta,
                                             const Eigen::MatrixXd& X,
                                             const Eigen::VectorXd& y,
                                             const Eigen::VectorXd& m);

// (1/h) sum m_i [z_i^2 / 8 - y_i z_i / 2], the hold-out Taylor loss without
// its constant; h = X.rows().
double masked_holdout_loss(const Eigen::VectorXd& theta,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& m);

// (1/n) sum m_i log(1 + exp(-y_i z_i)).
double masked_logistic_loss(const Eigen::VectorXd& theta,
                            const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& m);

// (1/n) sum m_i [log 2 - y z / 2 + z^2 / 8].
double masked_taylor_loss(const Eigen::VectorXd& theta,
                          const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& m);

// sum m_i y_i x_i. Divide by h for the normalised hold-out form.
Eigen::VectorXd mean_operator(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y,
                              const Eigen::VectorXd& m);

// 2 (X'MX + 8 n gamma Gamma)^{-1} X'My with n = X.rows(). Throws SolverError
// when the system is singular.
Eigen::VectorXd closed_form_minimizer(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y, double gamma,
                                      const Eigen::MatrixXd& Gamma = {},
                                      const Eigen::VectorXd& m = {});

// Newton's method on the ridge logistic objective
// (1/n) sum m_i log(1 + exp(-y z)) + gamma theta' Gamma theta.
Eigen::VectorXd logistic_minimizer(const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y, double gamma,
                                   const Eigen::MatrixXd& Gamma = {},
                                   const Eigen::VectorXd& m = {});

// d x d ridge matrix; empty input becomes the identity.
Eigen::MatrixXd resolve_gamma(const Eigen::MatrixXd& Gamma, Eigen::Index d);

}  // namespace vflr::learn

#endif  // VFLR_LEARN_LOSS_HPP_

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

#include "vflr/learn/loss.hpp"

#include <cmath>

#include "vflr/common/error.hpp"

namespace vflr::learn {
namespace {

constexpr double kLog2 = 0.69314718055994530942;

// log(1 + exp(-t))
double softplus_neg(double t) {
  return t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

// 1 / (1 + exp(t))
double sigmoid_neg(double t) {
  if (t >= 0) {
    const double e = std::exp(-t);
    return e / (1 + e);
  }
  return 1 / (1 + std::exp(t));
}

Eigen::VectorXd ones_if_empty(const Eigen::VectorXd& m, Eigen::Index n) {
  if (m.size() == 0) return Eigen::VectorXd::Ones(n);
  if (m.size() != n) throw DimensionError("mask length does not match rows");
  return m;
}

// LDLT::rcond() misses exactly zero pivots, so look at the pivots directly.
bool well_conditioned(const Eigen::LDLT<Eigen::MatrixXd>& ldlt, double tol) {
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  return d.size() == 0 || d.minCoeff() > tol * d.maxCoeff();
}

void check_shapes(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y) {
  if (theta.size() != X.cols()) {
    throw DimensionError("model has " + std::to_string(theta.size()) +
                         " weights but data has " + std::to_string(X.cols()) +
                         " columns");
  }
  if (y.size() != X.rows()) throw DimensionError("label count != row count");
}

}  // namespace

Eigen::MatrixXd resolve_gamma(const Eigen::MatrixXd& Gamma, Eigen::Index d) {
  if (Gamma.size() == 0) return Eigen::MatrixXd::Identity(d, d);
  if (Gamma.rows() != d || Gamma.cols() != d) {
    throw DimensionError("ridge matrix must be d x d");
  }
  return Gamma;
}

double logistic_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                     const Eigen::VectorXd& y) {
  return masked_logistic_loss(theta, X, y, {});
}

double taylor_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y, double gamma,
                   const Eigen::MatrixXd& Gamma) {
  const double ridge =
      gamma == 0.0 ? 0.0
                   : gamma * theta.dot(resolve_gamma(Gamma, theta.size()) * theta);
  return masked_taylor_loss(theta, X, y, {}) + ridge;
}

Eigen::VectorXd taylor_gradient(const Eigen::VectorXd& theta,
                                const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y) {
  if (X.rows() == 0) throw DimensionError("empty batch");
  return masked_gradient_sum(theta, X, y, {}) / static_cast<double>(X.rows());
}

Eigen::VectorXd taylor_objective_gradient(const Eigen::VectorXd& theta,
                                          const Eigen::MatrixXd& X,
                                          const Eigen::VectorXd& y,
                                          double gamma,
                                          const Eigen::MatrixXd& Gamma) {
  return taylor_gradient(theta, X, y) +
         2 * gamma * (resolve_gamma(Gamma, theta.size()) * theta);
}

Eigen::VectorXd masked_gradient_sum(const Eigen::VectorXd& theta,
                                    const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& m) {
  check_shapes(theta, X, y);
  const Eigen::VectorXd w = ones_if_empty(m, X.rows()).cwiseProduct(
      0.25 * (X * theta) - 0.5 * y);
  return X.transpose() * w;
}

Eigen::VectorXd masked_logistic_gradient_sum(const Eigen::VectorXd& theta,
                                             const Eigen::MatrixXd& X,
                                             const Eigen::VectorXd& y,
                                             const Eigen::VectorXd& m) {
  check_shapes(theta, X, y);
  const Eigen::VectorXd mm = ones_if_empty(m, X.rows());
  const Eigen::VectorXd z = X * theta;
  Eigen::VectorXd w(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    w[i] = -mm[i] * y[i] * sigmoid_neg(y[i] * z[i]);
  }
  return X.transpose() * w;
}

double masked_holdout_loss(const Eigen::VectorXd& theta,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& m) {
  check_shapes(theta, X, y);
  if (X.rows() == 0) throw DimensionError("empty hold-out");
  const Eigen::VectorXd mm = ones_if_empty(m, X.rows());
  const Eigen::VectorXd z = X * theta;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    acc += mm[i] * (z[i] * z[i] / 8 - y[i] * z[i] / 2);
  }
  return acc / static_cast<double>(X.rows());
}

double masked_logistic_loss(const Eigen::VectorXd& theta,
                            const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& m) {
  check_shapes(theta, X, y);
  if (X.rows() == 0) throw DimensionError("empty data");
  const Eigen::VectorXd mm = ones_if_empty(m, X.rows());
  const Eigen::VectorXd z = X * theta;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    acc += mm[i] * softplus_neg(y[i] * z[i]);
  }
  return acc / static_cast<double>(X.rows());
}

double masked_taylor_loss(const Eigen::VectorXd& theta,
                          const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& m) {
  check_shapes(theta, X, y);
  if (X.rows() == 0) throw DimensionError("empty data");
  const Eigen::VectorXd mm = ones_if_empty(m, X.rows());
  const Eigen::VectorXd z = X * theta;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    acc += mm[i] * (kLog2 - y[i] * z[i] / 2 + z[i] * z[i] / 8);
  }
  return acc / static_cast<double>(X.rows());
}

Eigen::VectorXd mean_operator(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y,
                              const Eigen::VectorXd& m) {
  if (y.size() != X.rows()) throw DimensionError("label count != row count");
  return X.transpose() * ones_if_empty(m, X.rows()).cwiseProduct(y);
}

Eigen::VectorXd closed_form_minimizer(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y, double gamma,
                                      const Eigen::MatrixXd& Gamma,
                                      const Eigen::VectorXd& m) {
  if (y.size() != X.rows()) throw DimensionError("label count != row count");
  if (gamma < 0) throw ConfigError("gamma must be non-negative");
  const Eigen::VectorXd mm = ones_if_empty(m, X.rows());
  const double n = static_cast<double>(X.rows());
  const Eigen::MatrixXd A =
      X.transpose() * mm.asDiagonal() * X +
      8 * n * gamma * resolve_gamma(Gamma, X.cols());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (!well_conditioned(ldlt, 1e-13)) {
    throw SolverError("Taylor normal equations are singular");
  }
  return 2 * ldlt.solve(X.transpose() * mm.cwiseProduct(y));
}

Eigen::VectorXd logistic_minimizer(const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y, double gamma,
                                   const Eigen::MatrixXd& Gamma,
                                   const Eigen::VectorXd& m) {
  if (y.size() != X.rows()) throw DimensionError("label count != row count");
  const Eigen::VectorXd mm = ones_if_empty(m, X.rows());
  const Eigen::MatrixXd G = resolve_gamma(Gamma, X.cols());
  const double n = static_cast<double>(X.rows());
  auto objective = [&](const Eigen::VectorXd& t) {
    return masked_logistic_loss(t, X, y, mm) + gamma * t.dot(G * t);
  };
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(X.cols());
  double f = objective(theta);
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd z = X * theta;
    Eigen::VectorXd grad = 2 * gamma * (G * theta);
    Eigen::VectorXd curv(X.rows());
    Eigen::VectorXd w(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double s = sigmoid_neg(y[i] * z[i]);
      w[i] = -mm[i] * y[i] * s / n;
      curv[i] = mm[i] * s * (1 - s) / n;
    }
    grad += X.transpose() * w;
    if (grad.norm() < 1e-12) break;
    const Eigen::MatrixXd H =
        X.transpose() * curv.asDiagonal() * X + 2 * gamma * G;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (!well_conditioned(ldlt, 1e-15)) {
      throw SolverError("logistic Newton system is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    double t = 1.0;
    Eigen::VectorXd next = theta - step;
    double fn = objective(next);
    while (fn > f - 1e-4 * t * grad.dot(step) && t > 1e-10) {
      t /= 2;
      next = theta - t * step;
      fn = objective(next);
    }
    if (t <= 1e-10) break;
    theta = next;
    f = fn;
  }
  return theta;
}

}  // namespace vflr::learn

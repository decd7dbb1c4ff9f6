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

#ifndef VFLR_THEORY_THEORY_HPP_
#define VFLR_THEORY_THEORY_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vflr/common/error.hpp"

// Drift of the ridge Taylor minimizer when the shuffle block of a vertically
// partitioned dataset is mis-linked by a product of transpositions.
//
// Observations are rows of X (n x d). Columns [0, d_anchor) belong to the
// anchor provider and never move; columns [d_anchor, d) form the shuffle
// block. Labels stay with the anchor rows.
namespace vflr::theory {

struct Transposition {
  std::size_t u = 0;
  std::size_t v = 0;
};

struct PermutationFactorization {
  std::vector<Transposition> steps;
  std::vector<bool> class_mismatch;  // y_u != y_v, one per step

  std::size_t T() const { return steps.size(); }
  std::size_t T_plus() const;
  double rho() const;  // 0 when T = 0

  // origin[i]: original shuffle row sitting at anchor row i after the first
  // `upto` steps (all steps when upto exceeds T).
  std::vector<std::size_t> origin(std::size_t n, std::size_t upto) const;
  // P with X_hat_S = P X_S after all steps.
  Eigen::MatrixXd matrix(std::size_t n) const;
  void validate(std::size_t n) const;
};

// Fills class_mismatch from the labels.
PermutationFactorization make_factorization(std::vector<Transposition> steps,
                                            const Eigen::VectorXd& y);

// T transpositions, round(rho_target * T) of them across classes. Throws
// ConfigError when the labels cannot support the request.
PermutationFactorization random_permutation(const Eigen::VectorXd& y,
                                            std::size_t T, double rho_target,
                                            std::uint64_t seed);

// Data after the first `upto` steps.
Eigen::MatrixXd apply(const Eigen::MatrixXd& X, std::size_t d_anchor,
                      const PermutationFactorization& f,
                      std::size_t upto = SIZE_MAX);

// Unnormalized mean operator sum_i y_i x_i.
Eigen::VectorXd mean_operator_sum(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y);

double max_row_norm(const Eigen::MatrixXd& X);

struct AccuracyEstimate {
  double epsilon = 0.0;
  double tau = 0.0;
  double xi = 0.0;
  double X_star = 0.0;
  std::size_t constraints = 0;
};

// Smallest xi = eps + tau / X_star over a 101-point eps grid in [0, 1]. For
// each eps, tau is the exact supremum over unit directions: every defining
// inequality only sees w through a span of at most three vectors, where the
// left side minus eps times the right is piecewise linear.
AccuracyEstimate estimate_accuracy(const Eigen::MatrixXd& X,
                                   std::size_t d_anchor,
                                   const PermutationFactorization& f,
                                   std::size_t eps_grid = 101);

// Counts (t, i, w) violations of the defining inequalities over `directions`
// random unit vectors plus the right singular vectors of X. Zero means "not
// refuted at that sample size".
std::size_t refute_accuracy(const Eigen::MatrixXd& X, std::size_t d_anchor,
                            const PermutationFactorization& f, double epsilon,
                            double tau, std::size_t directions,
                            std::uint64_t seed);

struct DriftStep {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  Eigen::VectorXd a;        // anchor part
  Eigen::VectorXd b;        // shuffle part
  Eigen::MatrixXd Lambda;   // Lambda_t
  Eigen::VectorXd lambda;   // lambda_t
  Eigen::VectorXd epsilon;  // mu_{t+1} - mu_t
};

struct DriftResult {
  std::vector<Eigen::VectorXd> recurrence;  // theta*_0 .. theta*_T
  std::vector<Eigen::VectorXd> direct;      // ridge solves on each S_t
  std::vector<DriftStep> steps;             // t = 0 .. T-1
  Eigen::VectorXd unravelled;               // H_{T,0} theta_0 + sum H lambda
  double max_step_error = 0.0;       // max_t |rec - direct| / max(1, |direct|)
  double max_inverse_error = 0.0;    // rank-two V_t vs direct inverse
  double max_c = 0.0;                // max over t of c_{0,t}, c_{1,t}, c_{2,t}
  double condition = 0.0;            // of V_0^{-1}
};

// Throws SolverError naming t when the invertibility condition fails, and
// ConfigError unless gamma > 0 and Gamma is positive definite.
DriftResult drift_recurrence(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             std::size_t d_anchor,
                             const PermutationFactorization& f, double gamma,
                             const Eigen::MatrixXd& Gamma = {});

// Ridge Taylor loss with the unnormalized Gamma penalty
// log 2 - (1/n) sum(y z / 2 - z^2 / 8) + gamma theta' Gamma theta.
double ridge_taylor_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, double gamma,
                         const Eigen::MatrixXd& Gamma = {});

struct Assumptions {
  AccuracyEstimate accuracy;
  std::size_t refuting_directions = 0;
  std::size_t refutations = 0;
  double alpha = 0.0;
  double alpha_limit = 0.0;  // (n / xi)^((1 - alpha) / 2)
  bool alpha_bounded = false;
  double stretch_variance = 0.0;   // sampled inf_w sigma^2(stretch)
  double calibration_lhs = 0.0;    // with the sampled variance
  double calibration_safe = 0.0;   // X*^2 / (gamma lambda_min(Gamma))
  bool calibrated = false;         // calibration_safe <= 1
  bool size_ok = false;            // n >= 4 xi
  bool hold() const;
};

struct CheckOptions {
  double alpha = 0.5;
  std::size_t directions = 10000;
  std::uint64_t seed = 0;
};

Assumptions check_assumptions(const Eigen::MatrixXd& X, std::size_t d_anchor,
                              const PermutationFactorization& f, double gamma,
                              const Eigen::MatrixXd& Gamma,
                              const CheckOptions& opt);

struct BoundTerms {
  double delta_m = 0.0;
  double delta_rho = 0.0;
  double delta_mu = 0.0;
  double delta_bar = 0.0;
  double C_n = 0.0;
  double alpha = 0.0;
};

BoundTerms bound_terms(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& theta0, double xi, double rho,
                       double alpha);

struct Theorem1Report {
  Assumptions assumptions;
  BoundTerms terms;
  bool excluded = false;  // theta*_0 = 0
  double ratio = 0.0;     // |theta*_T - theta*_0| / |theta*_0|
  double bound_T2 = 0.0;
  double bound_alpha = 0.0;
  bool bound_holds = false;  // meaningful when assumptions.hold()
};

Theorem1Report check_theorem1(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, std::size_t d_anchor,
                              const PermutationFactorization& f, double gamma,
                              const Eigen::MatrixXd& Gamma,
                              const CheckOptions& opt);

struct ImmunityReport {
  Assumptions assumptions;
  BoundTerms terms;
  double kappa = 0.0;
  double required_n = 0.0;  // xi ((delta_m + delta_rho) / kappa)^(1/alpha)
  bool size_condition = false;
  std::size_t qualifying = 0;  // y theta0'x > kappa
  std::size_t flips = 0;       // of those, y thetaT'x <= 0
  bool immune() const { return flips == 0; }
  // Assumptions and size condition hold yet a large-margin example flipped.
  bool violated() const;
};

ImmunityReport check_immunity(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, std::size_t d_anchor,
                              const PermutationFactorization& f, double gamma,
                              const Eigen::MatrixXd& Gamma, double kappa,
                              const CheckOptions& opt);

struct LossGapReport {
  Assumptions assumptions;
  BoundTerms terms;
  double gap = 0.0;  // on the true data
  double bound = 0.0;
  bool bound_holds = false;
};

LossGapReport check_loss_gap(const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, std::size_t d_anchor,
                             const PermutationFactorization& f, double gamma,
                             const Eigen::MatrixXd& Gamma,
                             const CheckOptions& opt);

// Per-sample bound on |d loss / d margin| over |theta| <= theta_bound.
double taylor_lipschitz(const Eigen::MatrixXd& X, double theta_bound);

struct GeneralizationTerms {
  BoundTerms terms;
  double loss = 0.0;        // ridge Taylor loss of theta*_0 on the true data
  double complexity = 0.0;  // 2 L X* theta_bound / sqrt(n)
  double confidence = 0.0;  // sqrt(ln(2 / delta) / 2n)
  double U_n = 0.0;
  double total = 0.0;
};

GeneralizationTerms generalization_terms(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t d_anchor,
    const PermutationFactorization& f, double gamma,
    const Eigen::MatrixXd& Gamma, double alpha, double delta, double L,
    double theta_bound);

// key=value lines, one per field.
std::string format(const Assumptions& a);
std::string format(const Theorem1Report& r);
std::string format(const ImmunityReport& r);
std::string format(const LossGapReport& r);
std::string format(const GeneralizationTerms& g);

}  // namespace vflr::theory

#endif  // VFLR_THEORY_THEORY_HPP_

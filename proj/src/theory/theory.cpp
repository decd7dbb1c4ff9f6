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

#include "vflr/theory/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace vflr::theory {

namespace {

Eigen::MatrixXd resolve(const Eigen::MatrixXd& Gamma, Eigen::Index d) {
  if (Gamma.size() == 0) return Eigen::MatrixXd::Identity(d, d);
  if (Gamma.rows() != d || Gamma.cols() != d) {
    throw DimensionError("Gamma must be d x d");
  }
  return Gamma;
}

void check_ridge(double gamma, const Eigen::MatrixXd& G) {
  if (!(gamma > 0)) throw ConfigError("gamma must be positive");
  if (!G.isApprox(G.transpose(), 1e-12)) {
    throw ConfigError("Gamma must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0)) {
    throw ConfigError("Gamma must be positive definite");
  }
}

double min_eigenvalue(const Eigen::MatrixXd& G) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void check_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                std::size_t d_anchor) {
  if (y.size() != X.rows()) throw DimensionError("label count != row count");
  if (d_anchor == 0 || d_anchor >= static_cast<std::size_t>(X.cols())) {
    throw ConfigError("anchor block must leave a non-empty shuffle block");
  }
}

Eigen::VectorXd pad_anchor(const Eigen::VectorXd& row, std::size_t da) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(row.size());
  out.head(static_cast<Eigen::Index>(da)) =
      row.head(static_cast<Eigen::Index>(da));
  return out;
}

Eigen::VectorXd pad_shuffle(const Eigen::VectorXd& row, std::size_t da) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(row.size());
  const Eigen::Index ds = row.size() - static_cast<Eigen::Index>(da);
  out.tail(ds) = row.tail(ds);
  return out;
}

// 2 (X'X + 8 n gamma Gamma)^{-1} sum_i y_i x_i
Eigen::VectorXd ridge_solution(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, double gamma,
                               const Eigen::MatrixXd& G) {
  const double b = 8.0 * static_cast<double>(X.rows()) * gamma;
  const Eigen::MatrixXd M = X.transpose() * X + b * G;
  return 2.0 * M.llt().solve(mean_operator_sum(X, y));
}

// One defining inequality: |d'w| <= eps max_j |p_j'w| + tau |w|.
struct Constraint {
  Eigen::VectorXd d;
  std::vector<Eigen::VectorXd> p;
};

std::vector<Constraint> constraints_of(const Eigen::MatrixXd& X,
                                       std::size_t da,
                                       const PermutationFactorization& f) {
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<Constraint> out;
  std::vector<std::size_t> origin(n);
  for (std::size_t i = 0; i < n; ++i) origin[i] = i;
  for (const auto& s : f.steps) {
    std::swap(origin[s.u], origin[s.v]);
    for (std::size_t i = 0; i < n; ++i) {
      if (origin[i] == i) continue;
      const auto r = static_cast<Eigen::Index>(i);
      Eigen::VectorXd e = pad_shuffle(
          X.row(static_cast<Eigen::Index>(origin[i])).transpose() -
              X.row(r).transpose(),
          da);
      if (e.isZero(0.0)) continue;
      out.push_back({std::move(e), {X.row(r).transpose()}});
    }
    const Eigen::VectorXd xu = X.row(static_cast<Eigen::Index>(s.u));
    const Eigen::VectorXd xv = X.row(static_cast<Eigen::Index>(s.v));
    out.push_back({pad_anchor(xu - xv, da), {xu, xv}});
    const Eigen::VectorXd xub = X.row(static_cast<Eigen::Index>(origin[s.u]));
    const Eigen::VectorXd xvb = X.row(static_cast<Eigen::Index>(origin[s.v]));
    out.push_back({pad_shuffle(xub - xvb, da), {xub, xvb}});
  }
  return out;
}

// Exact sup over unit w of |d'w| - eps max_j |p_j'w|, clamped at 0.
//
// Only the projection of w on span{d, p_j} matters. There the function is
// piecewise linear with kinks on the hyperplanes d'w = 0, p_j'w = 0 and
// (p_1 +- p_2)'w = 0, so a maximizer is the normalized projection of some
// piece gradient onto the complement of a set of active kink normals.
double exact_sup(const Constraint& c, double eps) {
  const Eigen::Index D = c.d.size();
  Eigen::MatrixXd M(D, 1 + static_cast<Eigen::Index>(c.p.size()));
  M.col(0) = c.d;
  for (std::size_t j = 0; j < c.p.size(); ++j) {
    M.col(static_cast<Eigen::Index>(j + 1)) = c.p[j];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0.0;
  Eigen::Index k = 0;
  while (k < sv.size() && sv[k] > 1e-13 * sv[0]) ++k;
  const Eigen::MatrixXd Q = svd.matrixU().leftCols(k);

  const Eigen::VectorXd dc = Q.transpose() * c.d;
  std::vector<Eigen::VectorXd> pc;
  for (const auto& p : c.p) pc.push_back(Q.transpose() * p);
  auto value = [&](const Eigen::VectorXd& w) {
    double m = 0.0;
    for (const auto& p : pc) m = std::max(m, std::abs(p.dot(w)));
    return std::abs(dc.dot(w)) - eps * m;
  };

  std::vector<Eigen::VectorXd> normals{dc};
  for (const auto& p : pc) normals.push_back(p);
  if (pc.size() == 2) {
    normals.push_back(pc[0] + pc[1]);
    normals.push_back(pc[0] - pc[1]);
  }
  std::vector<Eigen::VectorXd> grads;
  if (pc.empty() || eps == 0.0) grads.push_back(dc);
  for (const auto& p : pc) {
    for (double s : {1.0, -1.0}) grads.push_back(dc - s * eps * p);
  }

  double best = 0.0;
  const std::size_t m = normals.size();
  auto try_subset = [&](const std::vector<std::size_t>& subset) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(k, k);
    if (!subset.empty()) {
      Eigen::MatrixXd N(k, static_cast<Eigen::Index>(subset.size()));
      for (std::size_t j = 0; j < subset.size(); ++j) {
        N.col(static_cast<Eigen::Index>(j)) = normals[subset[j]];
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> ns(N, Eigen::ComputeFullU);
      const auto& s = ns.singularValues();
      Eigen::Index r = 0;
      while (r < s.size() && s[r] > 1e-13 * std::max(s[0], 1e-300)) ++r;
      if (r >= k) return;
      const Eigen::MatrixXd B = ns.matrixU().rightCols(k - r);
      P = B * B.transpose();
      if (k - r == 1) {
        best = std::max({best, value(B.col(0)), value(-B.col(0))});
      }
    }
    for (const auto& g : grads) {
      const Eigen::VectorXd w = P * g;
      const double nw = w.norm();
      if (nw <= 1e-300) continue;
      best = std::max({best, value(w / nw), value(-w / nw)});
    }
  };
  try_subset({});
  if (k >= 2) {
    for (std::size_t i = 0; i < m; ++i) try_subset({i});
  }
  if (k >= 3) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) try_subset({i, j});
    }
  }
  return best;
}

std::vector<Eigen::VectorXd> sample_directions(const Eigen::MatrixXd& X,
                                               std::size_t count,
                                               std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  const Eigen::Index d = X.cols();
  std::vector<Eigen::VectorXd> out;
  out.reserve(count + static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd w(d);
    for (auto& v : w) v = nd(gen);
    const double nw = w.norm();
    if (nw > 0) out.push_back(w / nw);
  }
  if (X.rows() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
    for (Eigen::Index j = 0; j < svd.matrixV().cols(); ++j) {
      out.push_back(svd.matrixV().col(j));
    }
  }
  return out;
}

double population_variance(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

}  // namespace

// ---- permutations --------------------------------------------------------

std::size_t PermutationFactorization::T_plus() const {
  return static_cast<std::size_t>(
      std::count(class_mismatch.begin(), class_mismatch.end(), true));
}

double PermutationFactorization::rho() const {
  return steps.empty() ? 0.0
                       : static_cast<double>(T_plus()) /
                             static_cast<double>(steps.size());
}

std::vector<std::size_t> PermutationFactorization::origin(
    std::size_t n, std::size_t upto) const {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  const std::size_t last = std::min(upto, steps.size());
  for (std::size_t t = 0; t < last; ++t) std::swap(out[steps[t].u], out[steps[t].v]);
  return out;
}

Eigen::MatrixXd PermutationFactorization::matrix(std::size_t n) const {
  const auto o = origin(n, SIZE_MAX);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o[i])) = 1.0;
  }
  return P;
}

void PermutationFactorization::validate(std::size_t n) const {
  if (class_mismatch.size() != steps.size()) {
    throw ConfigError("one mismatch flag per transposition");
  }
  for (const auto& s : steps) {
    if (s.u >= n || s.v >= n) throw RangeError("transposition index >= n");
    if (s.u == s.v) throw ConfigError("transposition needs two indices");
  }
}

PermutationFactorization make_factorization(std::vector<Transposition> steps,
                                            const Eigen::VectorXd& y) {
  PermutationFactorization f;
  f.steps = std::move(steps);
  for (const auto& s : f.steps) {
    if (s.u >= static_cast<std::size_t>(y.size()) ||
        s.v >= static_cast<std::size_t>(y.size())) {
      throw RangeError("transposition index >= n");
    }
    f.class_mismatch.push_back(y[static_cast<Eigen::Index>(s.u)] !=
                               y[static_cast<Eigen::Index>(s.v)]);
  }
  f.validate(static_cast<std::size_t>(y.size()));
  return f;
}

PermutationFactorization random_permutation(const Eigen::VectorXd& y,
                                            std::size_t T, double rho_target,
                                            std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(y.size());
  if (T > n) throw ConfigError("T must not exceed n");
  if (!(rho_target >= 0.0 && rho_target <= 1.0)) {
    throw ConfigError("rho must lie in [0, 1]");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) {
    (y[static_cast<Eigen::Index>(i)] > 0 ? pos : neg).push_back(i);
  }
  const auto t_plus = static_cast<std::size_t>(
      std::llround(rho_target * static_cast<double>(T)));
  const std::size_t t_within = T - t_plus;
  if (t_plus > 0 && (pos.empty() || neg.empty())) {
    throw ConfigError("class-mismatch transpositions need both classes");
  }
  std::vector<const std::vector<std::size_t>*> big;
  if (pos.size() >= 2) big.push_back(&pos);
  if (neg.size() >= 2) big.push_back(&neg);
  if (t_within > 0 && big.empty()) {
    throw ConfigError("within-class transpositions need a class of size >= 2");
  }

  std::mt19937_64 gen(seed);
  auto pick = [&](std::size_t k) { return static_cast<std::size_t>(gen() % k); };
  std::vector<bool> flags(T, false);
  std::fill(flags.begin(), flags.begin() + static_cast<long>(t_plus), true);
  for (std::size_t i = T; i > 1; --i) {
    const std::size_t j = pick(i);
    const bool tmp = flags[i - 1];
    flags[i - 1] = flags[j];
    flags[j] = tmp;
  }
  std::vector<Transposition> steps;
  for (bool cross : flags) {
    Transposition s;
    if (cross) {
      s = {pos[pick(pos.size())], neg[pick(neg.size())]};
      if (gen() & 1) std::swap(s.u, s.v);
    } else {
      const auto& cls = *big[pick(big.size())];
      const std::size_t i = pick(cls.size());
      std::size_t j = pick(cls.size() - 1);
      if (j >= i) ++j;
      s = {cls[i], cls[j]};
    }
    steps.push_back(s);
  }
  return make_factorization(std::move(steps), y);
}

Eigen::MatrixXd apply(const Eigen::MatrixXd& X, std::size_t d_anchor,
                      const PermutationFactorization& f, std::size_t upto) {
  const auto n = static_cast<std::size_t>(X.rows());
  f.validate(n);
  const auto o = f.origin(n, upto);
  const Eigen::Index ds = X.cols() - static_cast<Eigen::Index>(d_anchor);
  Eigen::MatrixXd out = X;
  for (std::size_t i = 0; i < n; ++i) {
    out.row(static_cast<Eigen::Index>(i)).tail(ds) =
        X.row(static_cast<Eigen::Index>(o[i])).tail(ds);
  }
  return out;
}

Eigen::VectorXd mean_operator_sum(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y) {
  if (y.size() != X.rows()) throw DimensionError("label count != row count");
  return X.transpose() * y;
}

double max_row_norm(const Eigen::MatrixXd& X) {
  return X.rows() == 0 ? 0.0 : X.rowwise().norm().maxCoeff();
}

// ---- accuracy ------------------------------------------------------------

AccuracyEstimate estimate_accuracy(const Eigen::MatrixXd& X,
                                   std::size_t d_anchor,
                                   const PermutationFactorization& f,
                                   std::size_t eps_grid) {
  f.validate(static_cast<std::size_t>(X.rows()));
  if (eps_grid < 2) throw ConfigError("eps grid needs at least two points");
  AccuracyEstimate best;
  best.X_star = max_row_norm(X);
  const auto cons = constraints_of(X, d_anchor, f);
  best.constraints = cons.size();
  if (cons.empty()) return best;
  best.xi = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < eps_grid; ++g) {
    const double eps = static_cast<double>(g) / static_cast<double>(eps_grid - 1);
    double tau = 0.0;
    for (const auto& c : cons) tau = std::max(tau, exact_sup(c, eps));
    const double xi = eps + (best.X_star > 0 ? tau / best.X_star : 0.0);
    if (xi < best.xi) {
      best.epsilon = eps;
      best.tau = tau;
      best.xi = xi;
    }
  }
  return best;
}

std::size_t refute_accuracy(const Eigen::MatrixXd& X, std::size_t d_anchor,
                            const PermutationFactorization& f, double epsilon,
                            double tau, std::size_t directions,
                            std::uint64_t seed) {
  f.validate(static_cast<std::size_t>(X.rows()));
  const auto cons = constraints_of(X, d_anchor, f);
  const auto dirs = sample_directions(X, directions, seed);
  std::size_t bad = 0;
  for (const auto& c : cons) {
    for (const auto& w : dirs) {
      const double lhs = std::abs(c.d.dot(w));
      double m = 0.0;
      for (const auto& p : c.p) m = std::max(m, std::abs(p.dot(w)));
      if (lhs > epsilon * m + tau + 1e-12 * (1.0 + lhs)) ++bad;
    }
  }
  return bad;
}

// ---- drift ---------------------------------------------------------------

DriftResult drift_recurrence(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             std::size_t d_anchor,
                             const PermutationFactorization& f, double gamma,
                             const Eigen::MatrixXd& Gamma) {
  check_data(X, y, d_anchor);
  const auto n = static_cast<std::size_t>(X.rows());
  f.validate(n);
  const Eigen::Index d = X.cols();
  const Eigen::MatrixXd G = resolve(Gamma, d);
  check_ridge(gamma, G);
  const double b = 8.0 * static_cast<double>(n) * gamma;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);

  auto inverse = [&](const Eigen::MatrixXd& Xh) {
    const Eigen::MatrixXd M = Xh.transpose() * Xh + b * G;
    return Eigen::MatrixXd(M.llt().solve(I));
  };

  DriftResult out;
  {
    const Eigen::MatrixXd M = X.transpose() * X + b * G;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    out.condition = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  }
  Eigen::MatrixXd V = inverse(X);
  Eigen::VectorXd mu = mean_operator_sum(X, y);
  Eigen::VectorXd theta = 2.0 * V * mu;
  out.recurrence.push_back(theta);
  out.direct.push_back(theta);

  std::vector<std::size_t> origin(n);
  for (std::size_t i = 0; i < n; ++i) origin[i] = i;
  Eigen::MatrixXd Xh = X;
  const Eigen::Index ds = d - static_cast<Eigen::Index>(d_anchor);

  for (std::size_t t = 0; t < f.T(); ++t) {
    const auto [u, v] = f.steps[t];
    std::swap(origin[u], origin[v]);
    const auto ub = static_cast<Eigen::Index>(origin[u]);
    const auto vb = static_cast<Eigen::Index>(origin[v]);
    const auto ui = static_cast<Eigen::Index>(u);
    const auto vi = static_cast<Eigen::Index>(v);

    DriftStep step;
    const Eigen::VectorXd ap =
        pad_anchor((X.row(ui) - X.row(vi)).transpose(), d_anchor);
    const Eigen::VectorXd bp =
        pad_shuffle((X.row(vb) - X.row(ub)).transpose(), d_anchor);
    step.a = ap.head(static_cast<Eigen::Index>(d_anchor));
    step.b = bp.tail(ds);
    step.c0 = ap.dot(V * ap);
    step.c1 = ap.dot(V * bp);
    step.c2 = bp.dot(V * bp);
    const double one_c1 = 1.0 - step.c1;
    const double den = one_c1 * one_c1 - step.c0 * step.c2;
    const double scale =
        std::max({1.0, one_c1 * one_c1, std::abs(step.c0 * step.c2)});
    if (std::abs(one_c1 * one_c1) <= 1e-14 || std::abs(den) <= 1e-14 * scale) {
      throw SolverError("invertibility condition fails at t = " +
                        std::to_string(t + 1));
    }
    out.max_c = std::max({out.max_c, step.c0, step.c1, step.c2});
    const Eigen::MatrixXd U =
        (step.c2 * ap * ap.transpose() +
         one_c1 * (ap * bp.transpose() + bp * ap.transpose()) +
         step.c0 * bp * bp.transpose()) /
        den;

    const Eigen::MatrixXd V_next = V + V * U * V;
    Xh.row(ui).tail(ds) = X.row(ub).tail(ds);
    Xh.row(vi).tail(ds) = X.row(vb).tail(ds);
    const Eigen::VectorXd mu_next = mean_operator_sum(Xh, y);

    step.Lambda = V * U;
    step.epsilon = mu_next - mu;
    step.lambda = 2.0 * V_next * step.epsilon;
    theta = theta + step.Lambda * theta + step.lambda;
    out.recurrence.push_back(theta);

    const Eigen::MatrixXd V_direct = inverse(Xh);
    const Eigen::VectorXd theta_direct = 2.0 * V_direct * mu_next;
    out.direct.push_back(theta_direct);
    const double tmax = theta_direct.cwiseAbs().maxCoeff();
    const double err = (theta - theta_direct).cwiseAbs().maxCoeff();
    out.max_step_error =
        std::max(out.max_step_error, tmax > 0 ? err / tmax : err);
    out.max_inverse_error =
        std::max(out.max_inverse_error,
                 (V_next - V_direct).cwiseAbs().maxCoeff() /
                     V_direct.cwiseAbs().maxCoeff());

    out.steps.push_back(std::move(step));
    V = V_next;
    mu = mu_next;
  }

  // H_{T,j} = prod_{k=j}^{T-1} (I + Lambda_k), later factors on the left.
  const std::size_t T = f.T();
  Eigen::MatrixXd H = I;  // H_{T,T}
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  for (std::size_t j = T; j-- > 0;) {
    acc += H * out.steps[j].lambda;  // H_{T,j+1} lambda_j
    H = H * (I + out.steps[j].Lambda);
  }
  out.unravelled = H * out.recurrence.front() + acc;
  return out;
}

double ridge_taylor_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, double gamma,
                         const Eigen::MatrixXd& Gamma) {
  if (y.size() != X.rows() || theta.size() != X.cols()) {
    throw DimensionError("loss shapes disagree");
  }
  const Eigen::VectorXd z = X * theta;
  const double n = static_cast<double>(X.rows());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    acc += 0.5 * y[i] * z[i] - z[i] * z[i] / 8.0;
  }
  return std::log(2.0) - acc / n +
         gamma * theta.dot(resolve(Gamma, X.cols()) * theta);
}

// ---- assumptions and bounds ---------------------------------------------

bool Assumptions::hold() const {
  return refutations == 0 && alpha_bounded && calibrated && size_ok;
}

Assumptions check_assumptions(const Eigen::MatrixXd& X, std::size_t d_anchor,
                              const PermutationFactorization& f, double gamma,
                              const Eigen::MatrixXd& Gamma,
                              const CheckOptions& opt) {
  if (!(opt.alpha > 0.0 && opt.alpha <= 1.0)) {
    throw ConfigError("alpha must lie in (0, 1]");
  }
  const Eigen::MatrixXd G = resolve(Gamma, X.cols());
  check_ridge(gamma, G);
  const double n = static_cast<double>(X.rows());
  Assumptions a;
  a.accuracy = estimate_accuracy(X, d_anchor, f);
  a.refuting_directions = opt.directions;
  a.refutations = refute_accuracy(X, d_anchor, f, a.accuracy.epsilon,
                                  a.accuracy.tau, opt.directions, opt.seed);
  a.alpha = opt.alpha;
  const double xi = a.accuracy.xi;
  a.alpha_limit = xi > 0 ? std::pow(n / xi, (1.0 - opt.alpha) / 2.0)
                         : std::numeric_limits<double>::infinity();
  a.alpha_bounded = static_cast<double>(f.T()) <= a.alpha_limit;

  a.stretch_variance = std::numeric_limits<double>::infinity();
  std::vector<double> stretch(static_cast<std::size_t>(X.rows()));
  for (const auto& w : sample_directions(X, opt.directions, opt.seed + 1)) {
    const Eigen::VectorXd proj = X * w;
    for (Eigen::Index i = 0; i < proj.size(); ++i) {
      stretch[static_cast<std::size_t>(i)] = std::abs(proj[i]);
    }
    a.stretch_variance =
        std::min(a.stretch_variance, population_variance(stretch));
  }
  const double xs2 = a.accuracy.X_star * a.accuracy.X_star;
  const double reg = gamma * min_eigenvalue(G);
  const double one_eps = 1.0 - a.accuracy.epsilon;
  a.calibration_lhs = xs2 / (one_eps * one_eps / 8.0 * a.stretch_variance + reg);
  // The sampled infimum can only overestimate the variance term, so the
  // pass/fail decision drops it.
  a.calibration_safe = xs2 / reg;
  a.calibrated = a.calibration_safe <= 1.0;
  a.size_ok = n >= 4.0 * xi;
  return a;
}

BoundTerms bound_terms(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& theta0, double xi, double rho,
                       double alpha) {
  const double n = static_cast<double>(X.rows());
  const double xs = max_row_norm(X);
  BoundTerms t;
  t.alpha = alpha;
  t.delta_m = theta0.norm() * xs;
  t.delta_rho = std::sqrt(xi) * rho / 4.0;
  t.delta_mu = xs > 0 ? mean_operator_sum(X, y).norm() / (n * xs) : 0.0;
  t.delta_bar = (t.delta_m + t.delta_rho) / 2.0;
  t.C_n = std::pow(xi / n, alpha);
  return t;
}

namespace {

struct Solved {
  Eigen::VectorXd theta0;
  Eigen::VectorXd thetaT;
};

Solved solve_pair(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  std::size_t d_anchor, const PermutationFactorization& f,
                  double gamma, const Eigen::MatrixXd& Gamma) {
  check_data(X, y, d_anchor);
  const Eigen::MatrixXd G = resolve(Gamma, X.cols());
  check_ridge(gamma, G);
  return {ridge_solution(X, y, gamma, G),
          ridge_solution(apply(X, d_anchor, f), y, gamma, G)};
}

bool leq(double a, double b) { return a <= b * (1.0 + 1e-12) + 1e-15; }

}  // namespace

Theorem1Report check_theorem1(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, std::size_t d_anchor,
                              const PermutationFactorization& f, double gamma,
                              const Eigen::MatrixXd& Gamma,
                              const CheckOptions& opt) {
  const Solved s = solve_pair(X, y, d_anchor, f, gamma, Gamma);
  Theorem1Report r;
  r.assumptions = check_assumptions(X, d_anchor, f, gamma, Gamma, opt);
  const double xi = r.assumptions.accuracy.xi;
  r.terms = bound_terms(X, y, s.theta0, xi, f.rho(), opt.alpha);
  const double norm0 = s.theta0.norm();
  if (norm0 == 0.0) {
    r.excluded = true;
    return r;
  }
  const double n = static_cast<double>(X.rows());
  const double T = static_cast<double>(f.T());
  const double xs = r.assumptions.accuracy.X_star;
  r.ratio = (s.thetaT - s.theta0).norm() / norm0;
  r.bound_T2 =
      xi / n * T * T * (1.0 + std::sqrt(xi) / (4.0 * norm0 * xs) * f.rho());
  r.bound_alpha = r.terms.C_n * (1.0 + r.terms.delta_rho / r.terms.delta_m);
  r.bound_holds = leq(r.ratio, r.bound_T2) && leq(r.ratio, r.bound_alpha);
  return r;
}

bool ImmunityReport::violated() const {
  return assumptions.hold() && size_condition && flips > 0;
}

ImmunityReport check_immunity(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, std::size_t d_anchor,
                              const PermutationFactorization& f, double gamma,
                              const Eigen::MatrixXd& Gamma, double kappa,
                              const CheckOptions& opt) {
  if (!(kappa > 0)) throw ConfigError("kappa must be positive");
  const Solved s = solve_pair(X, y, d_anchor, f, gamma, Gamma);
  ImmunityReport r;
  r.kappa = kappa;
  r.assumptions = check_assumptions(X, d_anchor, f, gamma, Gamma, opt);
  const double xi = r.assumptions.accuracy.xi;
  r.terms = bound_terms(X, y, s.theta0, xi, f.rho(), opt.alpha);
  r.required_n =
      xi * std::pow((r.terms.delta_m + r.terms.delta_rho) / kappa, 1.0 / opt.alpha);
  r.size_condition = static_cast<double>(X.rows()) > r.required_n;
  const Eigen::VectorXd m0 = y.cwiseProduct(X * s.theta0);
  const Eigen::VectorXd mT = y.cwiseProduct(X * s.thetaT);
  for (Eigen::Index i = 0; i < m0.size(); ++i) {
    if (m0[i] > kappa) {
      ++r.qualifying;
      if (mT[i] <= 0) ++r.flips;
    }
  }
  return r;
}

LossGapReport check_loss_gap(const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, std::size_t d_anchor,
                             const PermutationFactorization& f, double gamma,
                             const Eigen::MatrixXd& Gamma,
                             const CheckOptions& opt) {
  const Solved s = solve_pair(X, y, d_anchor, f, gamma, Gamma);
  LossGapReport r;
  r.assumptions = check_assumptions(X, d_anchor, f, gamma, Gamma, opt);
  r.terms = bound_terms(X, y, s.theta0, r.assumptions.accuracy.xi, f.rho(),
                        opt.alpha);
  r.gap = ridge_taylor_loss(s.thetaT, X, y, gamma, Gamma) -
          ridge_taylor_loss(s.theta0, X, y, gamma, Gamma);
  r.bound = r.terms.delta_bar * (r.terms.delta_mu + 6.0 * r.terms.delta_bar) *
            r.terms.C_n;
  r.bound_holds = leq(r.gap, r.bound);
  return r;
}

double taylor_lipschitz(const Eigen::MatrixXd& X, double theta_bound) {
  if (!(theta_bound >= 0)) throw ConfigError("theta bound must be >= 0");
  return 0.5 + max_row_norm(X) * theta_bound / 4.0;
}

GeneralizationTerms generalization_terms(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t d_anchor,
    const PermutationFactorization& f, double gamma,
    const Eigen::MatrixXd& Gamma, double alpha, double delta, double L,
    double theta_bound) {
  if (!(delta > 0 && delta < 1)) throw ConfigError("delta must lie in (0, 1)");
  if (!(L > 0)) throw ConfigError("L must be positive");
  if (!(alpha > 0 && alpha <= 1)) throw ConfigError("alpha must lie in (0, 1]");
  const Solved s = solve_pair(X, y, d_anchor, f, gamma, Gamma);
  const AccuracyEstimate acc = estimate_accuracy(X, d_anchor, f);
  const double n = static_cast<double>(X.rows());
  GeneralizationTerms g;
  g.terms = bound_terms(X, y, s.theta0, acc.xi, f.rho(), alpha);
  g.loss = ridge_taylor_loss(s.theta0, X, y, gamma, Gamma);
  g.complexity = 2.0 * L * acc.X_star * theta_bound / std::sqrt(n);
  g.confidence = std::sqrt(std::log(2.0 / delta) / (2.0 * n));
  g.U_n = g.terms.delta_bar *
          (g.terms.delta_mu + 6.0 * g.terms.delta_bar + 4.0 * L / std::sqrt(n)) *
          g.terms.C_n;
  g.total = g.loss + g.complexity + g.confidence + g.U_n;
  return g;
}

// ---- reports -------------------------------------------------------------

namespace {

class Kv {
 public:
  Kv() {
    out_.precision(17);
    out_ << std::boolalpha;
  }
  template <typename T>
  Kv& operator()(const std::string& key, const T& value) {
    out_ << key << '=' << value << '\n';
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

void put(Kv& kv, const BoundTerms& t) {
  kv("delta_m", t.delta_m)("delta_rho", t.delta_rho)("delta_mu", t.delta_mu)(
      "delta_bar", t.delta_bar)("C_n", t.C_n)("alpha", t.alpha);
}

}  // namespace

std::string format(const Assumptions& a) {
  Kv kv;
  kv("epsilon", a.accuracy.epsilon)("tau", a.accuracy.tau)("xi", a.accuracy.xi)(
      "X_star", a.accuracy.X_star)("accuracy_constraints", a.accuracy.constraints)(
      "accuracy_directions", a.refuting_directions)(
      "accuracy_refutations", a.refutations)(
      "accuracy", a.refutations == 0 ? "not refuted" : "refuted")(
      "alpha", a.alpha)("alpha_limit", a.alpha_limit)(
      "alpha_bounded", a.alpha_bounded)("stretch_variance", a.stretch_variance)(
      "calibration_lhs", a.calibration_lhs)(
      "calibration_safe", a.calibration_safe)("calibrated", a.calibrated)(
      "size_ok", a.size_ok)("assumptions_hold", a.hold());
  return kv.str();
}

std::string format(const Theorem1Report& r) {
  Kv kv;
  put(kv, r.terms);
  kv("excluded", r.excluded)("ratio", r.ratio)("bound_T2", r.bound_T2)(
      "bound_alpha", r.bound_alpha)("bound_holds", r.bound_holds);
  return format(r.assumptions) + kv.str();
}

std::string format(const ImmunityReport& r) {
  Kv kv;
  put(kv, r.terms);
  kv("kappa", r.kappa)("required_n", r.required_n)(
      "size_condition", r.size_condition)("qualifying", r.qualifying)(
      "flips", r.flips)("immune", r.immune())("violated", r.violated());
  return format(r.assumptions) + kv.str();
}

std::string format(const LossGapReport& r) {
  Kv kv;
  put(kv, r.terms);
  kv("gap", r.gap)("bound", r.bound)("bound_holds", r.bound_holds);
  return format(r.assumptions) + kv.str();
}

std::string format(const GeneralizationTerms& g) {
  Kv kv;
  put(kv, g.terms);
  kv("loss", g.loss)("complexity", g.complexity)("confidence", g.confidence)(
      "U_n", g.U_n)("total", g.total);
  return kv.str();
}

}  // namespace vflr::theory

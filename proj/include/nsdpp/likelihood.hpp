// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Regularized log-likelihood of the low-rank nonsymmetric model and its
/// analytic gradient with respect to V, B and C.
///
/// With L = V V^T + B C^T - C B^T, each observed basket Y contributes
/// log det(L_Y + eps I) - log det(L + I). Writing G_Y = (L_Y + eps I)^{-T}
/// (embedded into the rows/columns of Y) and W = (L + I)^{-T}, the partial
/// derivative of the data term with respect to L is
///     dL = sum_Y G_Y - n W,
/// and the chain rule through the factors gives
///     dV = (dL + dL^T) V,   dB = (dL - dL^T) C,   dC = (dL^T - dL) B.

#pragma once

#include <cmath>
#include <vector>

#include "nsdpp/kernel.hpp"
#include "nsdpp/parallel.hpp"

namespace nsdpp {

struct RegularizationConfig {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  /// Per-item training occurrence counts. Zero counts are read as 1.
  std::vector<std::size_t> lambda;

  static RegularizationConfig none(Index m) { return {0.0, 0.0, 0.0, std::vector<std::size_t>(m, 1)}; }

  void validate(Index m) const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
      throw ConfigurationError("regularization weights must be nonnegative");
    if (lambda.size() != m)
      throw ConfigurationError("lambda has " + std::to_string(lambda.size()) +
                               " entries for a catalog of " + std::to_string(m));
  }

  double inverse_count(Index i) const {
    return 1.0 / static_cast<double>(lambda[i] == 0 ? 1 : lambda[i]);
  }
};

/// How the per-basket terms are aggregated into data_loglik.
enum class Aggregation {
  Sum, ///< sum of per-basket log-probabilities
  Mean ///< their average over baskets
};

struct LossReport {
  double data_loglik = 0.0;
  double regularizer = 0.0;
  double total = 0.0;
  double log_normalizer = 0.0;
  std::vector<double> per_basket; // log P(Y_b), sentinel-adjusted
  std::vector<bool> singular_basket_flags;

  std::size_t singular_count() const {
    std::size_t n = 0;
    for (bool f : singular_basket_flags)
      n += f ? 1 : 0;
    return n;
  }
};

struct Gradients {
  Matrix dV;
  Matrix dB;
  Matrix dC;

  double norm() const {
    return std::sqrt(dV.squaredNorm() + dB.squaredNorm() + dC.squaredNorm());
  }
};

struct LossAndGradients {
  LossReport loss;
  Gradients grads;
};

inline double regularizer(const LowRankParams &p, const RegularizationConfig &cfg) {
  cfg.validate(p.size());
  double r = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double w = cfg.inverse_count(i);
    r -= w * (cfg.alpha * p.V().row(row).squaredNorm() + cfg.beta * p.B().row(row).squaredNorm() +
              cfg.gamma * p.C().row(row).squaredNorm());
  }
  return r;
}

namespace detail {

inline void validate_baskets(const std::vector<Subset> &baskets, Index m) {
  for (const auto &y : baskets) {
    if (y.empty())
      throw ConfigurationError("likelihood: empty basket");
    check_subset(y, m);
  }
}

inline Matrix gather_rows(const Matrix &a, const Subset &rows) {
  Matrix out(rows.size(), a.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = a.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

struct BasketTerm {
  double log_numerator = kSingularSentinel;
  bool singular = true;
  Eigen::MatrixXd inv_t; // (L_Y + eps I)^{-T}, empty when singular
};

inline BasketTerm basket_term(const Matrix &l, const Subset &y, double epsilon, bool want_inverse) {
  Eigen::MatrixXd ly = principal(l, y);
  ly.diagonal().array() += epsilon;
  BasketTerm t;
  const LogDet ld = log_det(ly);
  if (ld.sign <= 0 || !std::isfinite(ld.log_abs))
    return t;
  t.log_numerator = ld.log_abs;
  t.singular = false;
  if (want_inverse)
    t.inv_t = ly.partialPivLu().inverse().transpose();
  return t;
}

inline LossAndGradients evaluate(const LowRankParams &p, const std::vector<Subset> &baskets,
                                 const RegularizationConfig &cfg, double epsilon, Aggregation agg,
                                 bool want_gradients) {
  const Index m = p.size();
  cfg.validate(m);
  if (!(epsilon >= 0.0))
    throw ConfigurationError("epsilon must be nonnegative");
  validate_baskets(baskets, m);
  if (baskets.empty())
    throw ConfigurationError("likelihood: no baskets");

  const DenseKernel kernel = assemble_L(p);
  const Matrix &l = kernel.entries();

  Eigen::MatrixXd li = l;
  li.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(li);
  const LogDet norm_ld = log_det(li);
  if (norm_ld.sign <= 0)
    throw NumericalError("det(L + I) is not positive", condition_number(lu.rcond()));

  std::vector<BasketTerm> terms(baskets.size());
  parallel_for(baskets.size(), [&](std::size_t b) {
    terms[b] = basket_term(l, baskets[b], epsilon, want_gradients);
  }, 16);

  const double n = static_cast<double>(baskets.size());
  const double weight = agg == Aggregation::Mean ? 1.0 / n : 1.0;

  LossAndGradients out;
  LossReport &rep = out.loss;
  rep.log_normalizer = norm_ld.log_abs;
  rep.per_basket.resize(baskets.size());
  rep.singular_basket_flags.resize(baskets.size());
  double sum = 0.0;
  for (std::size_t b = 0; b < baskets.size(); ++b) {
    rep.per_basket[b] = terms[b].log_numerator - rep.log_normalizer;
    rep.singular_basket_flags[b] = terms[b].singular;
    sum += rep.per_basket[b];
  }
  if (rep.singular_count() == baskets.size())
    throw TrainingDegeneracyError("every basket has a nonpositive stabilized minor");
  rep.data_loglik = weight * sum;
  rep.regularizer = regularizer(p, cfg);
  rep.total = rep.data_loglik + rep.regularizer;

  if (!want_gradients)
    return out;

  // Normalizer: -(n * weight) * W with W = (L + I)^{-T}.
  const Eigen::MatrixXd w = lu.inverse().transpose();
  const double norm_scale = n * weight;
  const Eigen::MatrixXd w_sym = w + w.transpose();
  const Eigen::MatrixXd w_skew = w - w.transpose();

  Gradients &g = out.grads;
  g.dV = -norm_scale * (w_sym * p.V());
  g.dB = -norm_scale * (w_skew * p.C());
  g.dC = norm_scale * (w_skew * p.B());

  const bool skew = p.rank_nonsym() > 0;
  for (std::size_t b = 0; b < baskets.size(); ++b) {
    if (terms[b].singular)
      continue;
    const Subset &y = baskets[b];
    const Eigen::MatrixXd &gy = terms[b].inv_t;
    const Eigen::MatrixXd sym = weight * (gy + gy.transpose());
    const Matrix dv = sym * gather_rows(p.V(), y);
    Matrix db, dc;
    if (skew) {
      const Eigen::MatrixXd anti = weight * (gy - gy.transpose());
      db = anti * gather_rows(p.C(), y);
      dc = -anti * gather_rows(p.B(), y);
    }
    for (std::size_t r = 0; r < y.size(); ++r) {
      const auto row = static_cast<Eigen::Index>(y[r]);
      const auto k = static_cast<Eigen::Index>(r);
      g.dV.row(row) += dv.row(k);
      if (skew) {
        g.dB.row(row) += db.row(k);
        g.dC.row(row) += dc.row(k);
      }
    }
  }

  for (Index i = 0; i < m; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double s = 2.0 * cfg.inverse_count(i);
    g.dV.row(row) -= s * cfg.alpha * p.V().row(row);
    if (skew) {
      g.dB.row(row) -= s * cfg.beta * p.B().row(row);
      g.dC.row(row) -= s * cfg.gamma * p.C().row(row);
    }
  }
  return out;
}

} // namespace detail

/// Regularized log-likelihood. Each basket minor gets `epsilon * I` added; a
/// minor that is still nonpositive contributes kSingularSentinel and is flagged.
inline LossReport log_likelihood(const LowRankParams &p, const std::vector<Subset> &baskets,
                                 const RegularizationConfig &cfg, double epsilon = kDefaultEpsilon,
                                 Aggregation agg = Aggregation::Sum) {
  return detail::evaluate(p, baskets, cfg, epsilon, agg, false).loss;
}

/// Loss and gradient of LossReport::total from a single factorization pass.
inline LossAndGradients loss_and_gradients(const LowRankParams &p, const std::vector<Subset> &baskets,
                                           const RegularizationConfig &cfg,
                                           double epsilon = kDefaultEpsilon,
                                           Aggregation agg = Aggregation::Sum) {
  return detail::evaluate(p, baskets, cfg, epsilon, agg, true);
}

inline Gradients gradients(const LowRankParams &p, const std::vector<Subset> &baskets,
                           const RegularizationConfig &cfg, double epsilon = kDefaultEpsilon,
                           Aggregation agg = Aggregation::Sum) {
  return loss_and_gradients(p, baskets, cfg, epsilon, agg).grads;
}

} // namespace nsdpp

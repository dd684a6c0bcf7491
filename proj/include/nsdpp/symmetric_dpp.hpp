// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Standalone symmetric low-rank DPP (L = V V^T), written against Cholesky
/// factorizations and the D x D dual form of the normalizer:
///     det(V V^T + I_M) = det(V^T V + I_D),
///     (V V^T + I)^{-1} V = V (V^T V + I)^{-1}.
/// It shares no code with the nonsymmetric path and serves as the baseline
/// those routines must reproduce when B = C = 0.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "nsdpp/errors.hpp"
#include "nsdpp/kernel.hpp"
#include "nsdpp/types.hpp"

namespace nsdpp::symmetric {

struct SymmetricLoss {
  double data_loglik = 0.0;
  double regularizer = 0.0;
  double total = 0.0;
};

namespace detail {

inline Eigen::MatrixXd gram_rows(const Matrix &v, const Subset &y) {
  Eigen::MatrixXd vy(y.size(), v.cols());
  for (std::size_t r = 0; r < y.size(); ++r)
    vy.row(static_cast<Eigen::Index>(r)) = v.row(static_cast<Eigen::Index>(y[r]));
  return vy;
}

inline double log_det_spd(const Eigen::MatrixXd &a, bool &ok) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  ok = llt.info() == Eigen::Success;
  if (!ok)
    return kSingularSentinel;
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline double inv_count(const std::vector<std::size_t> &lambda, Index i) {
  return 1.0 / static_cast<double>(lambda[i] == 0 ? 1 : lambda[i]);
}

} // namespace detail

/// sum_Y [log det(V_Y V_Y^T + eps I) - log det(V V^T + I)] (or the mean)
/// minus alpha * sum_i ||v_i||^2 / lambda_i.
inline SymmetricLoss log_likelihood(const Matrix &v, const std::vector<Subset> &baskets, double alpha,
                                    const std::vector<std::size_t> &lambda, double epsilon,
                                    bool mean = false) {
  Eigen::MatrixXd dual = v.transpose() * v;
  dual.diagonal().array() += 1.0;
  bool ok = true;
  const double log_norm = detail::log_det_spd(dual, ok);
  if (!ok)
    throw NumericalError("symmetric normalizer is not positive definite");

  double sum = 0.0;
  for (const auto &y : baskets) {
    const Eigen::MatrixXd vy = detail::gram_rows(v, y);
    Eigen::MatrixXd ly = vy * vy.transpose();
    ly.diagonal().array() += epsilon;
    bool good = true;
    sum += detail::log_det_spd(ly, good) - log_norm;
  }
  SymmetricLoss out;
  out.data_loglik = mean ? sum / static_cast<double>(baskets.size()) : sum;
  for (Index i = 0; i < static_cast<Index>(v.rows()); ++i)
    out.regularizer -= alpha * detail::inv_count(lambda, i) * v.row(static_cast<Eigen::Index>(i)).squaredNorm();
  out.total = out.data_loglik + out.regularizer;
  return out;
}

/// d total / dV = sum_Y 2 (L_Y + eps I)^{-1} V_Y - 2 n V (V^T V + I)^{-1} - 2 alpha v_i / lambda_i.
inline Matrix gradient(const Matrix &v, const std::vector<Subset> &baskets, double alpha,
                       const std::vector<std::size_t> &lambda, double epsilon, bool mean = false) {
  const double n = static_cast<double>(baskets.size());
  const double w = mean ? 1.0 / n : 1.0;
  Eigen::MatrixXd dual = v.transpose() * v;
  dual.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> dual_llt(dual);
  // V (V^T V + I)^{-1} = ((V^T V + I)^{-1} V^T)^T since the dual is symmetric.
  const Eigen::MatrixXd push = dual_llt.solve(v.transpose()).transpose();
  Matrix g = -2.0 * n * w * push;

  for (const auto &y : baskets) {
    const Eigen::MatrixXd vy = detail::gram_rows(v, y);
    Eigen::MatrixXd ly = vy * vy.transpose();
    ly.diagonal().array() += epsilon;
    Eigen::LLT<Eigen::MatrixXd> llt(ly);
    if (llt.info() != Eigen::Success)
      continue;
    const Eigen::MatrixXd part = 2.0 * w * llt.solve(vy);
    for (std::size_t r = 0; r < y.size(); ++r)
      g.row(static_cast<Eigen::Index>(y[r])) += part.row(static_cast<Eigen::Index>(r));
  }
  for (Index i = 0; i < static_cast<Index>(v.rows()); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    g.row(row) -= 2.0 * alpha * detail::inv_count(lambda, i) * v.row(row);
  }
  return g;
}

/// score_i = v_i^T v_i - v_i^T V_J^T (V_J V_J^T + eps I)^{-1} V_J v_i for i not in J,
/// indexed by item; items in J get -inf.
inline std::vector<double> next_item_scores(const Matrix &v, const Subset &j, double epsilon = 0.0) {
  const auto m = static_cast<Index>(v.rows());
  const Eigen::MatrixXd vj = detail::gram_rows(v, j);
  Eigen::MatrixXd lj = vj * vj.transpose();
  lj.diagonal().array() += epsilon;
  Eigen::LLT<Eigen::MatrixXd> llt(lj);
  if (llt.info() != Eigen::Success)
    throw NumericalError("symmetric conditioning set is not positive definite");
  std::vector<double> scores(m, -std::numeric_limits<double>::infinity());
  std::size_t k = 0;
  for (Index i = 0; i < m; ++i) {
    if (k < j.size() && j[k] == i) {
      ++k;
      continue;
    }
    const Eigen::VectorXd vi = v.row(static_cast<Eigen::Index>(i)).transpose();
    const Eigen::VectorXd cross = vj * vi;
    scores[i] = vi.squaredNorm() - cross.dot(llt.solve(cross));
  }
  return scores;
}

} // namespace nsdpp::symmetric

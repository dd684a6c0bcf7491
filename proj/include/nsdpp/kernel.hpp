// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Low-rank nonsymmetric L-ensemble kernels and the determinantal quantities
/// derived from them: subset probabilities, the marginal kernel K and
/// conditional (Schur complement) kernels.

#pragma once

#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "nsdpp/linalg.hpp"
#include "nsdpp/types.hpp"

namespace nsdpp {

/// Log-numerator used in place of log(0) or log of a negative minor.
inline constexpr double kSingularSentinel = -1e10;

/// Default diagonal correction added to observed-subset minors during learning.
inline constexpr double kDefaultEpsilon = 1e-5;

/// Trainable factors of L = V V^T + (B C^T - C B^T).
class LowRankParams {
public:
  LowRankParams(Matrix v, Matrix b, Matrix c) : v_(std::move(v)), b_(std::move(b)), c_(std::move(c)) {
    if (v_.rows() < 1 || v_.cols() < 1)
      throw ConfigurationError("V must be at least 1x1");
    if (b_.rows() != v_.rows() || c_.rows() != v_.rows())
      throw ConfigurationError("row count mismatch: V has " + std::to_string(v_.rows()) +
                               " rows, B has " + std::to_string(b_.rows()) + ", C has " +
                               std::to_string(c_.rows()));
    if (b_.cols() != c_.cols())
      throw ConfigurationError("B and C must have the same number of columns");
    if (!v_.allFinite() || !b_.allFinite() || !c_.allFinite())
      throw ConfigurationError("low-rank factors contain non-finite entries");
  }

  /// B = C = 0 with `nonsym_rank` columns.
  static LowRankParams symmetric(Matrix v, Index nonsym_rank = 0) {
    const auto m = v.rows();
    return {std::move(v), Matrix::Zero(m, static_cast<Eigen::Index>(nonsym_rank)),
            Matrix::Zero(m, static_cast<Eigen::Index>(nonsym_rank))};
  }

  const Matrix &V() const { return v_; }
  const Matrix &B() const { return b_; }
  const Matrix &C() const { return c_; }

  Index size() const { return static_cast<Index>(v_.rows()); }
  Index rank_sym() const { return static_cast<Index>(v_.cols()); }
  Index rank_nonsym() const { return static_cast<Index>(b_.cols()); }

  bool has_skew_part() const { return !(b_.isZero(0.0) && c_.isZero(0.0)); }

  bool operator==(const LowRankParams &o) const {
    return v_ == o.v_ && b_ == o.b_ && c_ == o.c_;
  }

private:
  Matrix v_;
  Matrix b_;
  Matrix c_;
};

enum class KernelRole { LEnsemble, Marginal, Conditional };

/// A materialized M x M kernel. `index_map()[r]` is the ground-set item that
/// row/column r refers to.
class DenseKernel {
public:
  DenseKernel(Matrix entries, KernelRole role) : entries_(std::move(entries)), role_(role) {
    if (entries_.rows() != entries_.cols())
      throw DomainError("kernel must be square");
    index_map_.resize(static_cast<std::size_t>(entries_.rows()));
    std::iota(index_map_.begin(), index_map_.end(), Index{0});
  }

  DenseKernel(Matrix entries, KernelRole role, std::vector<Index> index_map)
      : entries_(std::move(entries)), role_(role), index_map_(std::move(index_map)) {
    if (entries_.rows() != entries_.cols())
      throw DomainError("kernel must be square");
    if (index_map_.size() != static_cast<std::size_t>(entries_.rows()))
      throw ConfigurationError("index map length does not match kernel size");
  }

  const Matrix &entries() const { return entries_; }
  KernelRole role() const { return role_; }
  const std::vector<Index> &index_map() const { return index_map_; }
  Index size() const { return static_cast<Index>(entries_.rows()); }

  double operator()(Index i, Index j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

private:
  Matrix entries_;
  KernelRole role_;
  std::vector<Index> index_map_;
};

struct SubsetProbability {
  double log_numerator = 0.0;  // log det(L_J + eps I)
  double log_normalizer = 0.0; // log det(L + I)
  double log_prob = 0.0;
  bool singular = false; // numerator hit the sentinel
};

namespace detail {
inline void require_role(const DenseKernel &k, KernelRole role, const char *op) {
  if (k.role() != role)
    throw DomainError(std::string(op) + ": kernel has the wrong role");
}
} // namespace detail

inline DenseKernel assemble_L(const LowRankParams &p) {
  Matrix s = p.V() * p.V().transpose();
  s = (0.5 * (s + s.transpose())).eval();
  if (p.rank_nonsym() == 0)
    return {std::move(s), KernelRole::LEnsemble};
  const Matrix bc = p.B() * p.C().transpose();
  // (B C^T)^T is C B^T, so this difference is skew to the last bit.
  Matrix a = bc - bc.transpose();
  if ((a + a.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw NumericalError("assembled skew part is not skew-symmetric");
  return {s + a, KernelRole::LEnsemble};
}

/// log det(L + I); L must be an L-ensemble.
inline double log_normalizer(const DenseKernel &l) {
  detail::require_role(l, KernelRole::LEnsemble, "log_normalizer");
  Eigen::MatrixXd li = l.entries();
  li.diagonal().array() += 1.0;
  const LogDet ld = log_det(li);
  if (ld.sign <= 0)
    throw NumericalError("det(L + I) is not positive", condition_number(reciprocal_condition(li)));
  return ld.log_abs;
}

/// K = I - (L + I)^{-1}.
inline DenseKernel marginal_kernel(const DenseKernel &l) {
  detail::require_role(l, KernelRole::LEnsemble, "marginal_kernel");
  const auto m = static_cast<Eigen::Index>(l.size());
  Eigen::MatrixXd li = l.entries();
  li.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(li);
  const double rc = lu.rcond();
  if (!(rc > 1e-14))
    throw NumericalError("L + I is numerically singular", condition_number(rc));
  Matrix k = Eigen::MatrixXd::Identity(m, m) - lu.inverse();
  return {std::move(k), KernelRole::Marginal};
}

/// log P_L(J) = log det(L_J + eps I) - log det(L + I). A nonpositive minor
/// yields the finite sentinel and sets `singular` instead of throwing.
inline SubsetProbability log_subset_prob(const DenseKernel &l, const Subset &j, double epsilon,
                                         double log_norm) {
  detail::require_role(l, KernelRole::LEnsemble, "log_subset_prob");
  check_subset(j, l.size());
  Eigen::MatrixXd lj = principal(l.entries(), j);
  lj.diagonal().array() += epsilon;
  const LogDet ld = log_det(lj);
  SubsetProbability out;
  out.log_normalizer = log_norm;
  if (ld.sign <= 0 || !std::isfinite(ld.log_abs)) {
    out.log_numerator = kSingularSentinel;
    out.singular = true;
  } else {
    out.log_numerator = ld.log_abs;
  }
  out.log_prob = out.log_numerator - out.log_normalizer;
  return out;
}

inline SubsetProbability log_subset_prob(const DenseKernel &l, const Subset &j,
                                         double epsilon = 0.0) {
  return log_subset_prob(l, j, epsilon, log_normalizer(l));
}

/// Schur complement L^J = L_Jc - L_{Jc,J} (L_J + eps I)^{-1} L_{J,Jc}.
/// Works on L-ensembles and on conditional kernels (index maps compose).
inline DenseKernel conditional_kernel(const DenseKernel &l, const Subset &j, double epsilon = 0.0) {
  if (l.role() == KernelRole::Marginal)
    throw DomainError("conditional_kernel: expects an L-ensemble or conditional kernel");
  check_subset(j, l.size());
  const Subset rest = complement(j, l.size());
  std::vector<Index> map;
  map.reserve(rest.size());
  for (Index r : rest)
    map.push_back(l.index_map()[r]);
  if (j.empty())
    return {l.entries(), KernelRole::Conditional, std::move(map)};

  Eigen::MatrixXd lj = principal(l.entries(), j);
  lj.diagonal().array() += epsilon;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(lj);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    Subset global;
    for (Index i : j)
      global.push_back(l.index_map()[i]);
    throw ConditioningError(global, condition_number(rc));
  }
  const Eigen::MatrixXd cross_rj = submatrix(l.entries(), rest, j);
  const Eigen::MatrixXd cross_jr = submatrix(l.entries(), j, rest);
  Matrix schur = principal(l.entries(), rest) - cross_rj * lu.solve(cross_jr);
  return {std::move(schur), KernelRole::Conditional, std::move(map)};
}

/// cov(1[i in Y], 1[j in Y]) = -K_ij K_ji. Positive means attraction.
inline double pair_correlation(const DenseKernel &k, Index i, Index j) {
  detail::require_role(k, KernelRole::Marginal, "pair_correlation");
  if (i == j)
    throw DomainError("pair_correlation needs two distinct items");
  if (i >= k.size() || j >= k.size())
    throw DomainError("pair_correlation: item out of range");
  return -k(i, j) * k(j, i);
}

/// Pr(i, j in Y) = det(K_{ij}).
inline double pair_marginal(const DenseKernel &k, Index i, Index j) {
  detail::require_role(k, KernelRole::Marginal, "pair_marginal");
  return k(i, i) * k(j, j) - k(i, j) * k(j, i);
}

} // namespace nsdpp

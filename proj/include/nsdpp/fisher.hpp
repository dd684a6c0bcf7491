// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Population log-likelihood of a DPP over an explicit subset distribution,
/// its first and second directional derivatives, the Fisher information
/// quadratic form, and the nullspace condition
///     tr((L*_J)^{-1} H_J) = 0 for every J
/// that decides whether the Fisher information at L* is definite.
///
/// Everything here enumerates all 2^M subsets, so M is capped at 12.
/// Distributions over subsets are vectors of length 2^M indexed by bitmask.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nsdpp/linalg.hpp"
#include "nsdpp/matrix_analysis.hpp"
#include "nsdpp/parallel.hpp"

namespace nsdpp {

inline constexpr Index kMaxFisherSize = 12;
inline constexpr double kNullspaceTolerance = 1e-10;

enum class ThetaKind { SymmetricPD, AllP, SignedP, SymPlusSkew, SignedPKnownPattern, DiagPlusSkew };

/// A parameter class together with the perturbation space H it spans.
class ThetaClass {
public:
  explicit ThetaClass(ThetaKind kind) : kind_(kind) {
    if (kind == ThetaKind::SignedPKnownPattern)
      throw ConfigurationError("a known sign pattern must be supplied");
  }

  /// pattern(i, j) = pattern(j, i) = eps with H_ji = eps * H_ij; entries must be +1 or -1.
  static ThetaClass known_pattern(SignPattern pattern) {
    for (Eigen::Index i = 0; i < pattern.rows(); ++i)
      for (Eigen::Index j = 0; j < pattern.cols(); ++j)
        if (i != j && (std::abs(pattern(i, j)) != 1 || pattern(i, j) != pattern(j, i)))
          throw ConfigurationError("sign pattern entries must be symmetric and +-1");
    ThetaClass t(ThetaKind::AllP);
    t.kind_ = ThetaKind::SignedPKnownPattern;
    t.pattern_ = std::move(pattern);
    return t;
  }

  ThetaKind kind() const { return kind_; }

  std::string name() const {
    switch (kind_) {
    case ThetaKind::SymmetricPD:
      return "symmetric-pd";
    case ThetaKind::AllP:
      return "all-p";
    case ThetaKind::SignedP:
      return "signed-p";
    case ThetaKind::SymPlusSkew:
      return "sym-plus-skew";
    case ThetaKind::SignedPKnownPattern:
      return "signed-p-known-pattern";
    case ThetaKind::DiagPlusSkew:
      return "diag-plus-skew";
    }
    return "?";
  }

  /// The eps with H_ji = eps * H_ij for every H in the space, if the class imposes one.
  std::optional<int> link(Index i, Index j) const {
    switch (kind_) {
    case ThetaKind::SymmetricPD:
      return 1;
    case ThetaKind::DiagPlusSkew:
      return -1;
    case ThetaKind::SignedPKnownPattern:
      return pattern_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    default:
      return std::nullopt;
    }
  }

  /// Basis of H: E_ii for each i, then per pair i < j either E_ij and E_ji
  /// (unlinked) or E_ij + eps E_ji (linked).
  std::vector<Matrix> basis(Index m) const {
    check_pattern_size(m);
    const auto n = static_cast<Eigen::Index>(m);
    std::vector<Matrix> out;
    for (Eigen::Index i = 0; i < n; ++i) {
      Matrix e = Matrix::Zero(n, n);
      e(i, i) = 1.0;
      out.push_back(std::move(e));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (auto eps = link(static_cast<Index>(i), static_cast<Index>(j))) {
          Matrix e = Matrix::Zero(n, n);
          e(i, j) = 1.0;
          e(j, i) = *eps;
          out.push_back(std::move(e));
        } else {
          Matrix a = Matrix::Zero(n, n), b = Matrix::Zero(n, n);
          a(i, j) = 1.0;
          b(j, i) = 1.0;
          out.push_back(std::move(a));
          out.push_back(std::move(b));
        }
      }
    }
    return out;
  }

  /// Orthogonal projection onto H.
  Matrix project(const Matrix &h) const {
    const auto m = static_cast<Index>(h.rows());
    check_pattern_size(m);
    Matrix p = h;
    for (Index i = 0; i < m; ++i) {
      for (Index j = i + 1; j < m; ++j) {
        if (auto eps = link(i, j)) {
          const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
          const double coord = 0.5 * (h(a, b) + *eps * h(b, a));
          p(a, b) = coord;
          p(b, a) = *eps * coord;
        }
      }
    }
    return p;
  }

  bool contains(const Matrix &h, double tol = 1e-12) const {
    return (h - project(h)).cwiseAbs().maxCoeff() <= tol;
  }

private:
  void check_pattern_size(Index m) const {
    if (kind_ == ThetaKind::SignedPKnownPattern && static_cast<Index>(pattern_.rows()) != m)
      throw ConfigurationError("sign pattern size does not match the matrix");
  }

  ThetaKind kind_;
  SignPattern pattern_;
};

struct FisherProbe {
  std::string name;
  Matrix l_star;
  Matrix h;
  ThetaClass theta;
};

/// Validates that L* is a P-matrix and H lies in the perturbation space.
inline FisherProbe make_probe(std::string name, Matrix l_star, Matrix h, ThetaClass theta) {
  if (l_star.rows() != l_star.cols() || h.rows() != l_star.rows() || h.cols() != l_star.cols())
    throw DomainError("probe matrices must be square and of equal size");
  if (!classify(l_star).is_P)
    throw DomainError("probe kernel is not a P-matrix");
  if (!theta.contains(h))
    throw DomainError("perturbation does not lie in the space spanned by the parameter class");
  return {std::move(name), std::move(l_star), std::move(h), std::move(theta)};
}

namespace detail {

inline void check_fisher_size(Index m) {
  if (m > kMaxFisherSize)
    throw CapabilityError("subset enumeration is limited to " + std::to_string(kMaxFisherSize) +
                          " items, got " + std::to_string(m));
}

inline void check_distribution(const std::vector<double> &p, Index m) {
  if (p.size() != (std::size_t{1} << m))
    throw DomainError("subset distribution must have 2^M entries");
}

/// tr(L_J^{-1} H_J) and tr((L_J^{-1} H_J)^2); throws ConditioningError if L_J is singular.
struct TraceTerms {
  double first = 0.0;
  double second = 0.0;
};

inline TraceTerms trace_terms(const Matrix &l, const Matrix &h, const Subset &j) {
  if (j.empty())
    return {};
  const Eigen::MatrixXd lj = principal(l, j);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(lj);
  if (!(std::abs(lu.determinant()) > 0.0) || !(lu.rcond() > 1e-14))
    throw ConditioningError(j, condition_number(lu.rcond()));
  const Eigen::MatrixXd x = lu.solve(principal(h, j));
  return {x.trace(), (x * x).trace()};
}

inline Eigen::MatrixXd solve_identity_plus(const Matrix &l, const Matrix &h) {
  Eigen::MatrixXd li = l;
  li.diagonal().array() += 1.0;
  return li.partialPivLu().solve(Eigen::MatrixXd(h));
}

} // namespace detail

/// P_L(J) = det(L_J) / det(L + I) for every J, from raw (unstabilized) minors.
inline std::vector<double> dpp_distribution(const Matrix &l) {
  const auto m = static_cast<Index>(l.rows());
  detail::check_fisher_size(m);
  const std::size_t n = std::size_t{1} << m;
  Eigen::MatrixXd li = l;
  li.diagonal().array() += 1.0;
  const double z = determinant(li);
  std::vector<double> p(n);
  parallel_for(n, [&](std::size_t mask) {
    p[mask] = determinant(principal(l, subset_from_mask(mask, m))) / z;
  });
  return p;
}

struct PopulationLoglik {
  double value = 0.0;
  /// First subset with positive weight but a nonpositive minor; value is -inf then.
  std::optional<Subset> degenerate_subset;
};

/// f(L) = sum_J p*_J log det L_J - log det(L + I).
inline PopulationLoglik population_loglik(const Matrix &l, const std::vector<double> &p_star) {
  const auto m = static_cast<Index>(l.rows());
  detail::check_fisher_size(m);
  detail::check_distribution(p_star, m);
  std::vector<double> terms(p_star.size(), 0.0);
  std::vector<char> bad(p_star.size(), 0);
  parallel_for(p_star.size(), [&](std::size_t mask) {
    if (p_star[mask] == 0.0)
      return;
    const LogDet ld = log_det(principal(l, subset_from_mask(mask, m)));
    if (ld.sign <= 0)
      bad[mask] = 1;
    else
      terms[mask] = p_star[mask] * ld.log_abs;
  });
  PopulationLoglik out;
  for (std::size_t mask = 0; mask < terms.size(); ++mask) {
    if (bad[mask]) {
      out.value = -std::numeric_limits<double>::infinity();
      out.degenerate_subset = subset_from_mask(mask, m);
      return out;
    }
    out.value += terms[mask];
  }
  Eigen::MatrixXd li = l;
  li.diagonal().array() += 1.0;
  out.value -= log_det(li).log_abs;
  return out;
}

/// df(L)(H) = sum_J p*_J tr(L_J^{-1} H_J) - tr((I + L)^{-1} H).
inline double d1_f(const Matrix &l, const std::vector<double> &p_star, const Matrix &h) {
  const auto m = static_cast<Index>(l.rows());
  detail::check_fisher_size(m);
  detail::check_distribution(p_star, m);
  std::vector<double> terms(p_star.size(), 0.0);
  parallel_for(p_star.size(), [&](std::size_t mask) {
    if (p_star[mask] != 0.0)
      terms[mask] = p_star[mask] * detail::trace_terms(l, h, subset_from_mask(mask, m)).first;
  });
  double s = 0.0;
  for (double t : terms)
    s += t;
  return s - detail::solve_identity_plus(l, h).trace();
}

/// d^2 f(L)(H, H) = -sum_J p*_J tr((L_J^{-1} H_J)^2) + tr(((I + L)^{-1} H)^2).
inline double d2_f(const Matrix &l, const std::vector<double> &p_star, const Matrix &h) {
  const auto m = static_cast<Index>(l.rows());
  detail::check_fisher_size(m);
  detail::check_distribution(p_star, m);
  std::vector<double> terms(p_star.size(), 0.0);
  parallel_for(p_star.size(), [&](std::size_t mask) {
    if (p_star[mask] != 0.0)
      terms[mask] = p_star[mask] * detail::trace_terms(l, h, subset_from_mask(mask, m)).second;
  });
  double s = 0.0;
  for (double t : terms)
    s += t;
  const Eigen::MatrixXd x = detail::solve_identity_plus(l, h);
  return -s + (x * x).trace();
}

/// Var over Y ~ P_{L*} of tr((L*_Y)^{-1} H_Y).
inline double fisher_form(const Matrix &l_star, const Matrix &h) {
  const auto m = static_cast<Index>(l_star.rows());
  detail::check_fisher_size(m);
  const auto p = dpp_distribution(l_star);
  std::vector<double> t(p.size(), 0.0);
  parallel_for(p.size(), [&](std::size_t mask) {
    t[mask] = detail::trace_terms(l_star, h, subset_from_mask(mask, m)).first;
  });
  double mean = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    mean += p[k] * t[k];
  double var = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    var += p[k] * (t[k] - mean) * (t[k] - mean);
  return var;
}

struct NullspaceResult {
  bool in_nullspace = true;
  std::optional<Subset> violating_subset;
  double max_abs_trace = 0.0;
};

inline NullspaceResult nullspace_check(const Matrix &l_star, const Matrix &h,
                                       double tol = kNullspaceTolerance) {
  const auto m = static_cast<Index>(l_star.rows());
  detail::check_fisher_size(m);
  NullspaceResult r;
  const std::uint64_t n = std::uint64_t{1} << m;
  for (std::uint64_t mask = 1; mask < n; ++mask) {
    const Subset j = subset_from_mask(mask, m);
    const double t = std::abs(detail::trace_terms(l_star, h, j).first);
    r.max_abs_trace = std::max(r.max_abs_trace, t);
    if (t > tol && r.in_nullspace) {
      r.in_nullspace = false;
      r.violating_subset = j;
    }
  }
  return r;
}

inline NullspaceResult nullspace_check(const FisherProbe &probe, double tol = kNullspaceTolerance) {
  return nullspace_check(probe.l_star, probe.h, tol);
}

/// Basis (as matrices, unit Frobenius norm in coordinates) of every H in the
/// class's space that satisfies the nullspace condition at L*. Computed from
/// the SVD of the map H -> (tr((L*_J)^{-1} H_J))_J restricted to the basis
/// of H, with cutoff 1e-10 * largest singular value.
inline std::vector<Matrix> fisher_nullspace(const Matrix &l_star, const ThetaClass &theta) {
  const auto m = static_cast<Index>(l_star.rows());
  detail::check_fisher_size(m);
  const auto basis = theta.basis(m);
  const std::uint64_t n_sub = (std::uint64_t{1} << m) - 1;
  Eigen::MatrixXd map(static_cast<Eigen::Index>(n_sub), static_cast<Eigen::Index>(basis.size()));
  parallel_for(n_sub, [&](std::size_t k) {
    const Subset j = subset_from_mask(k + 1, m);
    const Eigen::MatrixXd lj = principal(l_star, j);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lj);
    if (!(lu.rcond() > 1e-14))
      throw ConditioningError(j, condition_number(lu.rcond()));
    const Eigen::MatrixXd inv = lu.inverse();
    for (std::size_t c = 0; c < basis.size(); ++c)
      map(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) =
          (inv * principal(basis[c], j)).trace();
  }, 16);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(map, Eigen::ComputeFullV);
  const auto &sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
  std::vector<Matrix> out;
  const auto &v = svd.matrixV();
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const bool null = c >= sv.size() || sv(c) <= cutoff;
    if (!null)
      continue;
    Matrix h = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < basis.size(); ++k)
      h += v(static_cast<Eigen::Index>(k), c) * basis[k];
    out.push_back(std::move(h));
  }
  return out;
}

struct NullspaceStructureReport {
  std::size_t nullspace_dim = 0;
  bool fisher_definite = false;
  /// Every nullspace member has a zero diagonal.
  bool diagonal_vanishes = true;
  double max_diagonal = 0.0;
  /// Linked pairs (i, j) with L*_ij != 0 have H_ij = H_ji = 0. Unset if no pair qualifies.
  std::optional<bool> linked_pairs_vanish;
  std::size_t linked_pairs_checked = 0;
  /// For block-diagonal L*, every off-block member of H is in the nullspace. Unset if irreducible.
  std::optional<bool> off_block_in_nullspace;
  std::size_t blocks = 1;
};

inline NullspaceStructureReport nullspace_structure_checks(const Matrix &l_star, const ThetaClass &theta, double tol = 1e-8) {
  const auto m = static_cast<Index>(l_star.rows());
  NullspaceStructureReport r;
  const auto null = fisher_nullspace(l_star, theta);
  r.nullspace_dim = null.size();
  r.fisher_definite = null.empty();

  for (const auto &h : null)
    r.max_diagonal = std::max(r.max_diagonal, h.diagonal().cwiseAbs().maxCoeff());
  r.diagonal_vanishes = r.max_diagonal <= tol;

  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      if (!theta.link(i, j) || (std::abs(l_star(a, b)) <= 1e-12 && std::abs(l_star(b, a)) <= 1e-12))
        continue;
      ++r.linked_pairs_checked;
      bool ok = true;
      for (const auto &h : null)
        ok = ok && std::abs(h(a, b)) <= tol && std::abs(h(b, a)) <= tol;
      r.linked_pairs_vanish = r.linked_pairs_vanish.value_or(true) && ok;
    }
  }

  const auto blocks = block_components(l_star);
  r.blocks = blocks.empty() ? 0 : *std::max_element(blocks.begin(), blocks.end()) + 1;
  if (r.blocks > 1) {
    bool ok = true;
    Matrix combo = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    double w = 1.0;
    for (const auto &e : theta.basis(m)) {
      bool off_block = true;
      for (Eigen::Index a = 0; a < e.rows(); ++a)
        for (Eigen::Index b = 0; b < e.cols(); ++b)
          if (e(a, b) != 0.0 && blocks[static_cast<Index>(a)] == blocks[static_cast<Index>(b)])
            off_block = false;
      if (!off_block)
        continue;
      ok = ok && nullspace_check(l_star, e).in_nullspace;
      combo += w * e;
      w = -0.5 * w - 1.0;
    }
    ok = ok && nullspace_check(l_star, combo).in_nullspace;
    r.off_block_in_nullspace = ok;
  }
  return r;
}

/// The counterexamples showing that irreducible kernels can still have a
/// singular Fisher information once the kernel is not known to be symmetric.
inline std::vector<FisherProbe> counterexample_probes() {
  std::vector<FisherProbe> out;
  for (int eps : {1, -1}) {
    Matrix l(2, 2), h(2, 2);
    l << 1.0, 0.5, 0.5 * eps, 1.0;
    h << 0.0, 1.0, -eps, 0.0;
    out.push_back(make_probe(eps > 0 ? "signed-2x2-eps+1" : "signed-2x2-eps-1", l, h,
                             ThetaClass(ThetaKind::SignedP)));
  }
  Matrix h3(3, 3);
  h3 << 0, 0, 1, 0, 0, 0, -1, 0, 0;
  Matrix sym(3, 3);
  sym << 1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0;
  out.push_back(make_probe("signed-3x3", sym, h3, ThetaClass(ThetaKind::SignedP)));
  Matrix da(3, 3);
  da << 1.0, 0.5, 0.0, -0.5, 1.0, 0.5, 0.0, -0.5, 1.0;
  out.push_back(make_probe("diag-plus-skew-3x3", da, h3, ThetaClass(ThetaKind::DiagPlusSkew)));
  return out;
}

/// Random P-matrix whose structure matches the class: symmetric positive
/// definite, positive diagonal plus skew, a signed matrix with the given
/// pattern, or a general PD symmetric part plus skew. Every draw has L + L^T
/// positive definite, hence is a P-matrix.
template <typename Rng>
Matrix random_p_matrix(Index m, const ThetaClass &theta, Rng &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(m);
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double x = 0.4 * g(rng);
      int eps = 0;
      switch (theta.kind()) {
      case ThetaKind::SymmetricPD:
        eps = 1;
        break;
      case ThetaKind::DiagPlusSkew:
        eps = -1;
        break;
      case ThetaKind::SignedPKnownPattern:
      case ThetaKind::SignedP:
        eps = theta.link(static_cast<Index>(i), static_cast<Index>(j)).value_or(g(rng) > 0 ? 1 : -1);
        break;
      default:
        break;
      }
      if (eps != 0) {
        l(i, j) = x;
        l(j, i) = eps * x;
      } else {
        l(i, j) = x;
        l(j, i) = 0.4 * g(rng);
      }
    }
  }
  // Diagonal dominance of the symmetric part makes L + L^T positive definite.
  const Matrix s = 0.5 * (l + l.transpose());
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i)
        off += std::abs(s(i, j));
    l(i, i) = off + 0.5 + std::abs(g(rng));
  }
  return l;
}

} // namespace nsdpp

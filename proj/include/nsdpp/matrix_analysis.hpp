// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Brute-force classification of small matrices: P0 / P membership by
/// principal-minor enumeration, PSD-ness of the symmetric part, sign
/// patterns and support-graph connectivity.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nsdpp/linalg.hpp"
#include "nsdpp/parallel.hpp"
#include "nsdpp/types.hpp"

namespace nsdpp {

inline constexpr double kMinorTolerance = 1e-9;
inline constexpr Index kMaxEnumerationSize = 16;

/// Entry (i, j), i != j, is +1 if M_ij == M_ji, -1 if M_ij == -M_ji, 0 if both vanish.
using SignPattern = Eigen::MatrixXi;

struct MatrixClassReport {
  bool is_P0 = false;
  bool is_P = false;
  bool symmetric_part_psd = false;
  double min_principal_minor = 0.0;
  std::optional<Subset> witness_subset; // set iff !is_P0
  std::optional<SignPattern> sign_pattern; // empty when the matrix is not signed
};

struct SymSkew {
  Matrix symmetric;
  Matrix skew;
};

/// S = (M + M^T)/2, A = (M - M^T)/2. S is exactly symmetric and A exactly
/// skew; S + A reproduces M up to one rounding of the final sum.
inline SymSkew decompose_sym_skew(const Matrix &mx) {
  if (mx.rows() != mx.cols())
    throw DomainError("decompose_sym_skew: matrix is not square");
  Matrix t = mx.transpose();
  return {0.5 * (mx + t), 0.5 * (mx - t)};
}

inline std::optional<SignPattern> check_sign_pattern(const Matrix &mx, double tol = 1e-10) {
  if (mx.rows() != mx.cols())
    throw DomainError("check_sign_pattern: matrix is not square");
  const auto n = mx.rows();
  SignPattern eps = SignPattern::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = mx(i, j);
      const double b = mx(j, i);
      if (std::abs(std::abs(a) - std::abs(b)) > tol)
        return std::nullopt;
      int e = 0;
      if (std::abs(a) > tol || std::abs(b) > tol)
        e = (a * b >= 0) ? 1 : -1;
      eps(i, j) = eps(j, i) = e;
    }
  }
  return eps;
}

/// All 2^n - 1 nonempty principal minors, indexed by bitmask - 1.
inline std::vector<double> principal_minors(const Matrix &mx) {
  if (mx.rows() != mx.cols())
    throw DomainError("principal_minors: matrix is not square");
  const auto n = static_cast<Index>(mx.rows());
  if (n > kMaxEnumerationSize)
    throw CapabilityError("exhaustive minor enumeration is limited to " +
                          std::to_string(kMaxEnumerationSize) + " items, got " + std::to_string(n));
  const std::uint64_t count = (std::uint64_t{1} << n) - 1;
  std::vector<double> minors(count);
  parallel_for(count, [&](std::size_t k) {
    minors[k] = determinant(principal(mx, subset_from_mask(k + 1, n)));
  });
  return minors;
}

inline bool symmetric_part_psd(const Matrix &mx, double tol = kMinorTolerance) {
  const Eigen::MatrixXd s = decompose_sym_skew(mx).symmetric;
  if (s.rows() == 0)
    return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

inline MatrixClassReport classify(const Matrix &mx, double tol = kMinorTolerance) {
  if (mx.rows() != mx.cols())
    throw DomainError("classify: matrix is not square");
  const auto n = static_cast<Index>(mx.rows());
  const auto minors = principal_minors(mx);

  MatrixClassReport r;
  std::size_t arg = 0;
  for (std::size_t k = 1; k < minors.size(); ++k)
    if (minors[k] < minors[arg])
      arg = k;
  r.min_principal_minor = minors.empty() ? 1.0 : minors[arg];
  r.is_P0 = r.min_principal_minor >= -tol;
  r.is_P = r.min_principal_minor > tol;
  if (!r.is_P0)
    r.witness_subset = subset_from_mask(arg + 1, n);
  r.symmetric_part_psd = symmetric_part_psd(mx, tol);
  r.sign_pattern = check_sign_pattern(mx);
  return r;
}

/// Directed support graph: edge i -> j iff |M_ij| > tol.
inline bool is_irreducible(const Matrix &mx, double tol = 1e-12) {
  const auto n = static_cast<Index>(mx.rows());
  if (n <= 1)
    return true;
  auto reaches_all = [&](bool transposed) {
    std::vector<char> seen(n, 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < n; ++v) {
        const double w = transposed ? mx(v, u) : mx(u, v);
        if (!seen[v] && std::abs(w) > tol) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reaches_all(false) && reaches_all(true);
}

/// Diagonal blocks up to permutation: connected components of the graph with
/// an undirected edge wherever M_ij or M_ji is nonzero. Returns a component
/// label per item, labels numbered in order of first appearance.
inline std::vector<Index> block_components(const Matrix &mx, double tol = 1e-12) {
  const auto n = static_cast<Index>(mx.rows());
  constexpr Index unset = static_cast<Index>(-1);
  std::vector<Index> label(n, unset);
  Index next = 0;
  for (Index s = 0; s < n; ++s) {
    if (label[s] != unset)
      continue;
    std::vector<Index> stack{s};
    label[s] = next;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < n; ++v) {
        if (label[v] == unset && (std::abs(mx(u, v)) > tol || std::abs(mx(v, u)) > tol)) {
          label[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

} // namespace nsdpp

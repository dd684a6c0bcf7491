// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "nsdpp/errors.hpp"

namespace nsdpp {

/// Dense kernels and factors are stored row-major.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Index = std::size_t;

/// A subset of the ground set [0, M), kept sorted and duplicate-free.
using Subset = std::vector<Index>;

/// Sorts and deduplicates in place; returns the number of removed duplicates.
inline std::size_t normalize_subset(Subset &s) {
  std::sort(s.begin(), s.end());
  auto last = std::unique(s.begin(), s.end());
  const auto removed = static_cast<std::size_t>(s.end() - last);
  s.erase(last, s.end());
  return removed;
}

inline Subset subset_from_mask(std::uint64_t mask, Index m) {
  Subset s;
  for (Index i = 0; i < m; ++i)
    if (mask & (std::uint64_t{1} << i))
      s.push_back(i);
  return s;
}

inline std::uint64_t mask_from_subset(const Subset &s) {
  std::uint64_t mask = 0;
  for (Index i : s)
    mask |= std::uint64_t{1} << i;
  return mask;
}

/// [0, M) minus `s`; `s` must be sorted.
inline Subset complement(const Subset &s, Index m) {
  Subset out;
  out.reserve(m - std::min<Index>(m, s.size()));
  auto it = s.begin();
  for (Index i = 0; i < m; ++i) {
    if (it != s.end() && *it == i) {
      ++it;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

inline void check_subset(const Subset &s, Index m) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] >= m)
      throw DomainError("subset item " + std::to_string(s[k]) +
                        " outside ground set of size " + std::to_string(m));
    if (k > 0 && s[k] <= s[k - 1])
      throw DomainError("subset must be sorted and duplicate-free");
  }
}

} // namespace nsdpp

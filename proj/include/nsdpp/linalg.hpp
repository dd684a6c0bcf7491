// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>

#include "nsdpp/types.hpp"

namespace nsdpp {

/// Signed log-determinant: det = sign * exp(log_abs). sign == 0 means exactly singular.
struct LogDet {
  double log_abs = 0.0;
  int sign = 1;

  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

/// LU with partial pivoting; handles nonsymmetric input. Empty matrix -> det 1.
inline LogDet log_det(const Eigen::Ref<const Eigen::MatrixXd> &a) {
  if (a.rows() != a.cols())
    throw DomainError("log_det of a non-square matrix");
  if (a.rows() == 0)
    return {};
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const auto &f = lu.matrixLU();
  LogDet out;
  out.sign = static_cast<int>(lu.permutationP().determinant());
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const double p = f(i, i);
    if (p == 0.0 || !std::isfinite(p)) {
      return {-std::numeric_limits<double>::infinity(), 0};
    }
    if (p < 0)
      out.sign = -out.sign;
    out.log_abs += std::log(std::abs(p));
  }
  return out;
}

inline double determinant(const Eigen::Ref<const Eigen::MatrixXd> &a) {
  return log_det(a).value();
}

/// Rows `rows` and columns `cols` of `a`.
inline Eigen::MatrixXd submatrix(const Matrix &a, const Subset &rows, const Subset &cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(r, c) = a(rows[r], cols[c]);
  return out;
}

inline Eigen::MatrixXd principal(const Matrix &a, const Subset &s) {
  return submatrix(a, s, s);
}

/// Reciprocal condition estimate in the 1-norm; 0 for singular input.
inline double reciprocal_condition(const Eigen::MatrixXd &a) {
  if (a.rows() == 0)
    return 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rc = lu.rcond();
  return std::isfinite(rc) ? rc : 0.0;
}

inline double condition_number(double rcond) {
  return rcond > 0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
}

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd> &a) {
  return a.allFinite();
}

} // namespace nsdpp

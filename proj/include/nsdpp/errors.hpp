// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsdpp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent shapes, infeasible generator settings, bad hyperparameters.
class ConfigurationError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (i == j, non-square...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Request exceeds what an exhaustive algorithm can handle.
class CapabilityError : public Error {
public:
  using Error::Error;
};

/// Malformed or unusable input data.
class DataError : public Error {
public:
  using Error::Error;
};

class ParseError : public DataError {
public:
  ParseError(const std::string &what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Generic numerical breakdown (singular system, non-finite values).
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string &what, double condition = 0.0)
      : Error(what), condition_(condition) {}

  /// Estimated condition number of the offending matrix, 0 if unknown.
  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

namespace detail {
inline std::string format_subset(const std::vector<std::size_t> &s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k)
      os << ',';
    os << s[k];
  }
  os << '}';
  return os.str();
}
} // namespace detail

/// Conditioning on a subset whose principal submatrix is singular.
class ConditioningError : public NumericalError {
public:
  ConditioningError(const std::vector<std::size_t> &subset, double condition)
      : NumericalError("singular principal submatrix on subset " +
                           detail::format_subset(subset),
                       condition),
        subset_(subset) {}

  const std::vector<std::size_t> &subset() const noexcept { return subset_; }

private:
  std::vector<std::size_t> subset_;
};

/// Every training basket hit the singular-minor sentinel.
class TrainingDegeneracyError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// The training loss became NaN or overflowed.
class NonFiniteLossError : public NumericalError {
public:
  NonFiniteLossError(std::size_t epoch, double grad_norm)
      : NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                       " (gradient norm " + std::to_string(grad_norm) + ")"),
        epoch_(epoch), grad_norm_(grad_norm) {}

  std::size_t epoch() const noexcept { return epoch_; }
  double grad_norm() const noexcept { return grad_norm_; }

private:
  std::size_t epoch_;
  double grad_norm_;
};

} // namespace nsdpp

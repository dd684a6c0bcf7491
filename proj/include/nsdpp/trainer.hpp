// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Full-batch Adam on the regularized log-likelihood, with convergence
/// judged on the mean validation log-likelihood.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "nsdpp/dataset.hpp"
#include "nsdpp/likelihood.hpp"

namespace nsdpp {

struct TrainConfig {
  Index rank_sym = 0; ///< D; 0 means "largest training basket"
  Index rank_nonsym = 0; ///< D'
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double epsilon = kDefaultEpsilon;
  double learning_rate = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t max_epochs = 1000;
  /// Epochs always run before the convergence test is allowed to stop training.
  std::size_t min_epochs = 0;
  double convergence_rel_tol = 1e-4;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  bool mean_mode = false;
  /// Freeze B = C = 0: the symmetric low-rank baseline.
  bool symmetric_only = false;
  /// Permit D smaller than the largest basket (those minors are then singular).
  bool allow_small_rank = false;

  void validate() const {
    if (!(convergence_rel_tol > 0) || !(adam_eps > 0) || !(epsilon >= 0) || !(learning_rate >= 0) ||
        !(init_scale >= 0))
      throw ConfigurationError("training tolerances must be positive");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1))
      throw ConfigurationError("Adam decay rates must lie in [0, 1)");
    if (alpha < 0 || beta < 0 || gamma < 0)
      throw ConfigurationError("regularization weights must be nonnegative");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0; ///< -total before the step
  double validation_loglik = 0.0; ///< mean log P over validation baskets after the step
  double grad_norm = 0.0;
  double wall_time = 0.0; ///< seconds since fit() started
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  std::optional<LowRankParams> final_params;
  bool converged = false;
  std::size_t epochs_run = 0;
};

/// Called once per epoch with the parameters and the exact gradient used for the step.
using TrainObserver = std::function<void(std::size_t epoch, const LowRankParams &, const Gradients &)>;

/// Entries i.i.d. uniform in [-init_scale, init_scale]; V, then B, then C,
/// each filled row-major from one seeded stream. B and C stay zero in
/// symmetric mode.
inline LowRankParams init_params(const TrainConfig &cfg, Index m) {
  if (m < 1)
    throw ConfigurationError("catalog must contain at least one item");
  if (cfg.rank_sym < 1)
    throw ConfigurationError("rank_sym must be at least 1");
  const auto mm = static_cast<Eigen::Index>(m);
  const auto d = static_cast<Eigen::Index>(cfg.rank_sym);
  const auto dp = static_cast<Eigen::Index>(cfg.rank_nonsym);
  Matrix v = Matrix::Zero(mm, d), b = Matrix::Zero(mm, dp), c = Matrix::Zero(mm, dp);
  if (cfg.init_scale > 0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-cfg.init_scale, cfg.init_scale);
    auto fill = [&](Matrix &x) {
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
          x(i, j) = u(rng);
    };
    fill(v);
    if (!cfg.symmetric_only) {
      fill(b);
      fill(c);
    }
  }
  return {std::move(v), std::move(b), std::move(c)};
}

namespace detail {

struct AdamState {
  Matrix m;
  Matrix v;

  explicit AdamState(const Matrix &shape)
      : m(Matrix::Zero(shape.rows(), shape.cols())), v(Matrix::Zero(shape.rows(), shape.cols())) {}

  /// Ascent step on `x` along gradient `g`.
  void step(Matrix &x, const Matrix &g, const TrainConfig &cfg, std::size_t t) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
    x.array() += cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
  }
};

} // namespace detail

/// Resolves D = 0 to the largest training basket and checks D against it.
inline TrainConfig resolve_ranks(TrainConfig cfg, const BasketDataset &ds) {
  std::size_t largest = 0;
  for (std::size_t b = 0; b < ds.baskets.size(); ++b)
    if (ds.splits[b] == Split::Train)
      largest = std::max(largest, ds.baskets[b].size());
  if (cfg.rank_sym == 0)
    cfg.rank_sym = std::max<std::size_t>(1, largest);
  if (cfg.rank_sym < largest && !cfg.allow_small_rank)
    throw ConfigurationError("rank_sym " + std::to_string(cfg.rank_sym) +
                             " is below the largest training basket (" + std::to_string(largest) + ")");
  if (cfg.symmetric_only)
    cfg.rank_nonsym = 0;
  return cfg;
}

inline TrainTrace fit(const TrainConfig &config, const BasketDataset &ds, const TrainObserver &observer = {}) {
  config.validate();
  const TrainConfig cfg = resolve_ranks(config, ds);
  const auto train = ds.baskets_in(Split::Train);
  const auto validation = ds.baskets_in(Split::Validation);
  if (train.empty() || validation.empty())
    throw DataError("training needs nonempty train and validation splits");

  const RegularizationConfig reg{cfg.alpha, cfg.beta, cfg.gamma, ds.lambda_or_one()};
  const auto no_reg = RegularizationConfig::none(ds.catalog_size);
  const Aggregation agg = cfg.mean_mode ? Aggregation::Mean : Aggregation::Sum;

  const LowRankParams init = init_params(cfg, ds.catalog_size);
  Matrix v = init.V(), b = init.B(), c = init.C();
  detail::AdamState sv(v), sb(b), sc(c);

  TrainTrace trace;
  const auto start = std::chrono::steady_clock::now();
  std::optional<double> previous_val;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const LowRankParams current(v, b, c);
    LossAndGradients lg;
    try {
      lg = loss_and_gradients(current, train, reg, cfg.epsilon, agg);
    } catch (const NumericalError &) {
      if (epoch == 0)
        throw;
      throw NonFiniteLossError(epoch, trace.epochs.back().grad_norm);
    }
    const double gnorm = lg.grads.norm();
    if (!std::isfinite(lg.loss.total) || !std::isfinite(gnorm))
      throw NonFiniteLossError(epoch, gnorm);
    if (observer)
      observer(epoch, current, lg.grads);

    const std::size_t t = epoch + 1;
    sv.step(v, lg.grads.dV, cfg, t);
    if (!cfg.symmetric_only && cfg.rank_nonsym > 0) {
      sb.step(b, lg.grads.dB, cfg, t);
      sc.step(c, lg.grads.dC, cfg, t);
    }
    if (!v.allFinite() || !b.allFinite() || !c.allFinite())
      throw NonFiniteLossError(epoch, gnorm);

    double val = 0.0;
    try {
      val = log_likelihood(LowRankParams(v, b, c), validation, no_reg, cfg.epsilon, Aggregation::Mean)
                .data_loglik;
    } catch (const TrainingDegeneracyError &) {
      val = kSingularSentinel;
    } catch (const NumericalError &) {
      throw NonFiniteLossError(epoch, gnorm);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = -lg.loss.total;
    rec.validation_loglik = val;
    rec.grad_norm = gnorm;
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    trace.epochs.push_back(rec);
    trace.epochs_run = epoch + 1;

    if (previous_val && epoch + 1 >= cfg.min_epochs) {
      const double denom = std::abs(*previous_val);
      const double rel = std::abs(val - *previous_val) / (denom > 0 ? denom : 1.0);
      if (rel <= cfg.convergence_rel_tol) {
        trace.converged = true;
        break;
      }
    }
    previous_val = val;
  }
  trace.final_params.emplace(std::move(v), std::move(b), std::move(c));
  return trace;
}

/// Tab-separated per-epoch trace with a header row. Without timings the
/// output depends only on config, data and seed.
inline void write_trace(const TrainTrace &trace, std::ostream &out, bool with_timings = true) {
  out << "epoch\ttrain_loss\tvalidation_loglik\tgrad_norm" << (with_timings ? "\twall_time" : "") << '\n';
  const auto old = out.precision(17);
  for (const auto &r : trace.epochs) {
    out << r.epoch << '\t' << r.train_loss << '\t' << r.validation_loglik << '\t' << r.grad_norm;
    if (with_timings)
      out << '\t' << r.wall_time;
    out << '\n';
  }
  out.precision(old);
}

} // namespace nsdpp

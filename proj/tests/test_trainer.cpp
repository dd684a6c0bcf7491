// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <limits>
#include <cstring>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "nsdpp/checkpoint.hpp"
#include "nsdpp/trainer.hpp"

namespace {

using nsdpp::Matrix;
using nsdpp::Subset;

// Two groups of five items; baskets of two or three items never cross groups.
nsdpp::BasketDataset grouped_data(std::uint64_t seed, std::size_t n = 60) {
  std::mt19937_64 rng(seed);
  std::vector<Subset> baskets;
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t base = (b % 2) * 5;
    std::vector<std::size_t> items{0, 1, 2, 3, 4};
    std::shuffle(items.begin(), items.end(), rng);
    Subset y;
    for (std::size_t k = 0; k < 2 + b % 2; ++k)
      y.push_back(base + items[k]);
    baskets.push_back(y);
  }
  return nsdpp::split(nsdpp::make_dataset(10, std::move(baskets)), 0.8, 0.1, seed);
}

nsdpp::TrainConfig small_config() {
  nsdpp::TrainConfig cfg;
  cfg.rank_sym = 4;
  cfg.rank_nonsym = 2;
  cfg.alpha = cfg.beta = cfg.gamma = 0.01;
  cfg.max_epochs = 40;
  cfg.seed = 5;
  return cfg;
}

bool bit_equal(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

TEST(InitParams, DeterministicPerSeed) {
  auto cfg = small_config();
  const auto a = nsdpp::init_params(cfg, 10);
  const auto b = nsdpp::init_params(cfg, 10);
  EXPECT_TRUE(bit_equal(a.V(), b.V()));
  EXPECT_TRUE(bit_equal(a.C(), b.C()));
  cfg.seed = 6;
  EXPECT_FALSE(bit_equal(a.V(), nsdpp::init_params(cfg, 10).V()));
  EXPECT_LE(a.V().cwiseAbs().maxCoeff(), cfg.init_scale);
}

TEST(InitParams, ZeroScaleGivesZeros) {
  auto cfg = small_config();
  cfg.init_scale = 0.0;
  const auto p = nsdpp::init_params(cfg, 6);
  EXPECT_EQ(p.V().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(p.B().cwiseAbs().maxCoeff(), 0.0);
}

TEST(InitParams, SymmetricModeLeavesSkewFactorsZero) {
  auto cfg = small_config();
  cfg.symmetric_only = true;
  const auto p = nsdpp::init_params(cfg, 6);
  EXPECT_EQ(p.B().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(p.C().cwiseAbs().maxCoeff(), 0.0);
}

TEST(InitParams, RejectsZeroRank) {
  auto cfg = small_config();
  cfg.rank_sym = 0;
  EXPECT_THROW(nsdpp::init_params(cfg, 6), nsdpp::ConfigurationError);
}

TEST(ResolveRanks, AutoAndBounds) {
  const auto ds = grouped_data(1);
  auto cfg = small_config();
  cfg.rank_sym = 0;
  EXPECT_EQ(nsdpp::resolve_ranks(cfg, ds).rank_sym, 3u);
  cfg.rank_sym = 2;
  EXPECT_THROW(nsdpp::resolve_ranks(cfg, ds), nsdpp::ConfigurationError);
  cfg.allow_small_rank = true;
  EXPECT_EQ(nsdpp::resolve_ranks(cfg, ds).rank_sym, 2u);
  cfg.symmetric_only = true;
  EXPECT_EQ(nsdpp::resolve_ranks(cfg, ds).rank_nonsym, 0u);
}

TEST(TrainConfig, Validation) {
  auto cfg = small_config();
  cfg.alpha = -1;
  EXPECT_THROW(cfg.validate(), nsdpp::ConfigurationError);
  cfg = small_config();
  cfg.adam_beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), nsdpp::ConfigurationError);
  cfg = small_config();
  cfg.convergence_rel_tol = 0.0;
  EXPECT_THROW(cfg.validate(), nsdpp::ConfigurationError);
}

TEST(Fit, ZeroLearningRateLeavesParameters) {
  const auto ds = grouped_data(2);
  auto cfg = small_config();
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 3;
  const auto trace = nsdpp::fit(cfg, ds);
  const auto init = nsdpp::init_params(cfg, ds.catalog_size);
  EXPECT_TRUE(bit_equal(trace.final_params->V(), init.V()));
  EXPECT_TRUE(bit_equal(trace.final_params->B(), init.B()));
}

TEST(Fit, TrainingLossDecreases) {
  const auto ds = grouped_data(3);
  const auto trace = nsdpp::fit(small_config(), ds);
  ASSERT_GE(trace.epochs.size(), 2u);
  EXPECT_LT(trace.epochs.back().train_loss, trace.epochs.front().train_loss);
  EXPECT_GT(trace.epochs.back().validation_loglik, trace.epochs.front().validation_loglik);
}

TEST(Fit, DeterministicTrace) {
  const auto ds = grouped_data(4);
  const auto a = nsdpp::fit(small_config(), ds);
  const auto b = nsdpp::fit(small_config(), ds);
  EXPECT_TRUE(bit_equal(a.final_params->V(), b.final_params->V()));
  EXPECT_TRUE(bit_equal(a.final_params->C(), b.final_params->C()));
  std::ostringstream sa, sb;
  nsdpp::write_trace(a, sa, false);
  nsdpp::write_trace(b, sb, false);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str().find("wall_time"), std::string::npos);
}

TEST(Fit, ObserverSeesExactGradient) {
  const auto ds = grouped_data(5);
  auto cfg = small_config();
  cfg.max_epochs = 4;
  const nsdpp::RegularizationConfig reg{cfg.alpha, cfg.beta, cfg.gamma, ds.lambda_or_one()};
  const auto train = ds.baskets_in(nsdpp::Split::Train);
  std::size_t calls = 0;
  nsdpp::fit(cfg, ds, [&](std::size_t, const nsdpp::LowRankParams &p, const nsdpp::Gradients &g) {
    const auto ref = nsdpp::gradients(p, train, reg, cfg.epsilon);
    EXPECT_TRUE(bit_equal(g.dV, ref.dV));
    EXPECT_TRUE(bit_equal(g.dB, ref.dB));
    EXPECT_TRUE(bit_equal(g.dC, ref.dC));
    ++calls;
  });
  EXPECT_GE(calls, 1u);
}

TEST(Fit, SymmetricModeHasNoSkewPart) {
  const auto ds = grouped_data(6);
  auto cfg = small_config();
  cfg.symmetric_only = true;
  const auto trace = nsdpp::fit(cfg, ds);
  EXPECT_EQ(trace.final_params->rank_nonsym(), 0u);
}

TEST(Fit, ConvergenceStopsEarlyAndRespectsMinEpochs) {
  const auto ds = grouped_data(7);
  auto cfg = small_config();
  cfg.max_epochs = 2000;
  cfg.convergence_rel_tol = 1e-3;
  const auto t = nsdpp::fit(cfg, ds);
  EXPECT_TRUE(t.converged);
  EXPECT_LT(t.epochs_run, cfg.max_epochs);
  cfg.min_epochs = t.epochs_run + 10;
  EXPECT_GE(nsdpp::fit(cfg, ds).epochs_run, cfg.min_epochs);
}

TEST(Fit, MissingValidationIsDataError) {
  auto ds = nsdpp::make_dataset(4, {{0, 1}, {2, 3}});
  auto cfg = small_config();
  cfg.rank_sym = 2;
  EXPECT_THROW(nsdpp::fit(cfg, ds), nsdpp::DataError);
}

TEST(Fit, DivergenceIsReported) {
  const auto ds = grouped_data(8);
  auto cfg = small_config();
  cfg.learning_rate = 1e200;
  cfg.max_epochs = 10;
  EXPECT_THROW(nsdpp::fit(cfg, ds), nsdpp::NumericalError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  auto cfg = small_config();
  const auto p = nsdpp::init_params(cfg, 7);
  std::stringstream buf;
  nsdpp::write_checkpoint(p, buf);
  const auto q = nsdpp::read_checkpoint(buf);
  EXPECT_TRUE(bit_equal(p.V(), q.V()));
  EXPECT_TRUE(bit_equal(p.B(), q.B()));
  EXPECT_TRUE(bit_equal(p.C(), q.C()));
}

TEST(Checkpoint, RejectsBadMagicAndTruncation) {
  std::stringstream bad("XXXXXXXXXXXXXXXXXXXXXXXXXXXXXXXXXXXXXX");
  EXPECT_THROW(nsdpp::read_checkpoint(bad), nsdpp::DataError);

  std::stringstream buf;
  nsdpp::write_checkpoint(nsdpp::init_params(small_config(), 5), buf);
  const std::string full = buf.str();
  std::stringstream cut(full.substr(0, full.size() - 3));
  EXPECT_THROW(nsdpp::read_checkpoint(cut), nsdpp::DataError);
  EXPECT_THROW(nsdpp::read_checkpoint(std::string("/nonexistent/model.nsdpp")), nsdpp::DataError);
}

} // namespace

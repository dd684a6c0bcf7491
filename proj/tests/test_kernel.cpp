// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nsdpp/kernel.hpp"
#include "nsdpp/matrix_analysis.hpp"
#include "oracles.hpp"

namespace {

using nsdpp::DenseKernel;
using nsdpp::KernelRole;
using nsdpp::LowRankParams;
using nsdpp::Matrix;
using nsdpp::Subset;

LowRankParams random_params(std::mt19937_64 &rng, Eigen::Index m, Eigen::Index d, Eigen::Index dp) {
  return {oracle::random_matrix(rng, m, d), oracle::random_matrix(rng, m, dp), oracle::random_matrix(rng, m, dp)};
}

DenseKernel ensemble(const Matrix &l) { return {l, KernelRole::LEnsemble}; }

TEST(LowRankParams, RejectsMismatchedShapes) {
  EXPECT_THROW(LowRankParams(Matrix::Ones(3, 2), Matrix::Ones(2, 1), Matrix::Ones(3, 1)), nsdpp::ConfigurationError);
  EXPECT_THROW(LowRankParams(Matrix::Ones(3, 2), Matrix::Ones(3, 1), Matrix::Ones(3, 2)), nsdpp::ConfigurationError);
  EXPECT_THROW(LowRankParams(Matrix::Ones(0, 2), Matrix::Ones(0, 1), Matrix::Ones(0, 1)), nsdpp::ConfigurationError);
}

TEST(LowRankParams, RejectsNonFiniteEntries) {
  Matrix v = Matrix::Ones(2, 1);
  v(1, 0) = std::nan("");
  EXPECT_THROW(LowRankParams::symmetric(v), nsdpp::ConfigurationError);
}

TEST(AssembleL, IdentityFactorGivesIdentity) {
  const auto l = nsdpp::assemble_L(LowRankParams::symmetric(Matrix::Identity(2, 2), 1));
  EXPECT_EQ(l.entries(), Matrix(Matrix::Identity(2, 2)));
  EXPECT_EQ(l.role(), KernelRole::LEnsemble);
}

TEST(AssembleL, PureSkewByHand) {
  Matrix b(2, 1), c(2, 1);
  b << 1, 0;
  c << 0, 1;
  const auto l = nsdpp::assemble_L(LowRankParams(Matrix::Zero(2, 1), b, c));
  Matrix expected(2, 2);
  expected << 0, 1, -1, 0;
  EXPECT_EQ(l.entries(), expected);
}

TEST(AssembleL, MatchesEntrywiseOracleAndSkewIsExact) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_params(rng, 7, 3, 2);
    const auto l = nsdpp::assemble_L(p);
    const oracle::Mat ref = oracle::kernel(p.V(), p.B(), p.C());
    EXPECT_LE((oracle::Mat(l.entries()) - ref).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix s = p.V() * p.V().transpose();
    const Matrix a = l.entries() - 0.5 * (s + s.transpose());
    EXPECT_LE((a + a.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AssembleL, RandomKernelIsP0ByCofactorOracle) {
  std::mt19937_64 rng(2);
  const auto l = nsdpp::assemble_L(random_params(rng, 5, 3, 2)).entries();
  const Matrix sym = l + l.transpose();
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().minCoeff(), -1e-10);
  int count = 0;
  for (std::uint64_t mask = 1; mask < 32; ++mask, ++count)
    EXPECT_GE(oracle::minor(l, oracle::from_mask(mask, 5)), -1e-10);
  EXPECT_EQ(count, 31);
}

TEST(MarginalKernel, IdentityAndZero) {
  const auto k = nsdpp::marginal_kernel(ensemble(Matrix::Identity(3, 3)));
  EXPECT_LE((k.entries() - 0.5 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(k.role(), KernelRole::Marginal);
  const auto k0 = nsdpp::marginal_kernel(ensemble(Matrix::Zero(3, 3)));
  EXPECT_EQ(k0.entries().cwiseAbs().maxCoeff(), 0.0);
}

TEST(MarginalKernel, SingularLPlusIReportsCondition) {
  Matrix l = -Matrix::Identity(2, 2);
  try {
    nsdpp::marginal_kernel(ensemble(l));
    FAIL() << "expected NumericalError";
  } catch (const nsdpp::NumericalError &e) {
    EXPECT_TRUE(std::isinf(e.condition()) || e.condition() > 1e12);
  }
}

TEST(MarginalKernel, MinorsMatchEnumeratedInclusionProbabilities) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 3; ++t) {
    const auto l = nsdpp::assemble_L(random_params(rng, 4, 2, 2));
    const auto k = nsdpp::marginal_kernel(l);
    for (std::uint64_t mask = 1; mask < 16; ++mask) {
      const auto j = oracle::from_mask(mask, 4);
      EXPECT_NEAR(oracle::minor(k.entries(), j), oracle::inclusion_probability(l.entries(), j), 1e-8);
    }
    for (Eigen::Index i = 0; i < 4; ++i) {
      EXPECT_GE(k.entries()(i, i), -1e-8);
      EXPECT_LE(k.entries()(i, i), 1.0 + 1e-8);
    }
  }
}

TEST(LogSubsetProb, IdentityKernelClosedForms) {
  const auto l = ensemble(Matrix::Identity(2, 2));
  EXPECT_NEAR(nsdpp::log_subset_prob(l, {}).log_prob, -std::log(4.0), 1e-15);
  const auto p = nsdpp::log_subset_prob(l, {0});
  EXPECT_NEAR(p.log_prob, -std::log(4.0), 1e-15);
  EXPECT_DOUBLE_EQ(p.log_prob, p.log_numerator - p.log_normalizer);
}

TEST(LogSubsetProb, SumsToOneOverAllSubsets) {
  std::mt19937_64 rng(4);
  for (Eigen::Index m : {1, 3, 6, 9}) {
    const auto l = nsdpp::assemble_L(random_params(rng, m, 2, 2));
    const double z = nsdpp::log_normalizer(l);
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
      const auto pr = nsdpp::log_subset_prob(l, nsdpp::subset_from_mask(mask, static_cast<nsdpp::Index>(m)), 0.0, z);
      if (!pr.singular)
        total += std::exp(pr.log_prob);
    }
    EXPECT_NEAR(total, 1.0, 1e-9) << "M=" << m;
  }
}

TEST(LogSubsetProb, SingularMinorGivesSentinelNotThrow) {
  const auto l = nsdpp::assemble_L(LowRankParams::symmetric(Matrix::Ones(3, 1)));
  const auto p = nsdpp::log_subset_prob(l, {0, 1});
  EXPECT_TRUE(p.singular);
  EXPECT_EQ(p.log_numerator, nsdpp::kSingularSentinel);
}

TEST(LogSubsetProb, EpsilonStabilizesRankDeficientMinor) {
  const auto l = nsdpp::assemble_L(LowRankParams::symmetric(Matrix::Ones(3, 1)));
  const double eps = 1e-5;
  const auto p = nsdpp::log_subset_prob(l, {0, 1}, eps);
  EXPECT_FALSE(p.singular);
  // det([[1+e,1],[1,1+e]]) = 2e + e^2
  EXPECT_NEAR(p.log_numerator, std::log(2 * eps + eps * eps), 1e-9);
}

TEST(LogSubsetProb, RejectsOutOfRangeAndWrongRole) {
  const auto l = ensemble(Matrix::Identity(2, 2));
  EXPECT_THROW(nsdpp::log_subset_prob(l, {2}), nsdpp::DomainError);
  EXPECT_THROW(nsdpp::log_subset_prob(nsdpp::marginal_kernel(l), {0}), nsdpp::DomainError);
}

TEST(ConditionalKernel, TwoByTwoByHand) {
  Matrix l(2, 2);
  l << 2, 1, 1, 2;
  const auto c = nsdpp::conditional_kernel(ensemble(l), {0});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c(0, 0), 1.5, 1e-15);
  EXPECT_EQ(c.index_map(), std::vector<nsdpp::Index>{1});
  EXPECT_EQ(c.role(), KernelRole::Conditional);
}

TEST(ConditionalKernel, EmptyConditioningIsIdentityMap) {
  std::mt19937_64 rng(5);
  const auto l = nsdpp::assemble_L(random_params(rng, 4, 2, 1));
  const auto c = nsdpp::conditional_kernel(l, {});
  EXPECT_EQ(c.entries(), l.entries());
  EXPECT_EQ(c.index_map(), (std::vector<nsdpp::Index>{0, 1, 2, 3}));
}

TEST(ConditionalKernel, DiagonalMatchesMinorRatios) {
  std::mt19937_64 rng(6);
  const auto l = nsdpp::assemble_L(random_params(rng, 5, 5, 2));
  for (std::uint64_t mask = 1; mask < 32; ++mask) {
    const auto j = oracle::from_mask(mask, 5);
    if (j.size() > 2)
      continue;
    const auto c = nsdpp::conditional_kernel(l, j);
    const double dj = oracle::minor(l.entries(), j);
    for (std::size_t r = 0; r < c.size(); ++r) {
      auto ji = j;
      ji.push_back(c.index_map()[r]);
      std::sort(ji.begin(), ji.end());
      EXPECT_NEAR(c(r, r), oracle::minor(l.entries(), ji) / dj, 1e-9);
    }
  }
}

TEST(ConditionalKernel, MatchesProbabilityRatio) {
  std::mt19937_64 rng(7);
  const auto l = nsdpp::assemble_L(random_params(rng, 6, 6, 3));
  const Subset j{1, 4};
  const auto c = nsdpp::conditional_kernel(l, j);
  const double pj = nsdpp::log_subset_prob(l, j).log_prob;
  for (std::size_t r = 0; r < c.size(); ++r) {
    Subset ji = j;
    ji.push_back(c.index_map()[r]);
    nsdpp::normalize_subset(ji);
    EXPECT_NEAR(std::exp(nsdpp::log_subset_prob(l, ji).log_prob - pj), c(r, r), 1e-8);
  }
}

TEST(ConditionalKernel, NestedConditioningComposesIndexMaps) {
  std::mt19937_64 rng(8);
  const auto l = nsdpp::assemble_L(random_params(rng, 6, 6, 2));
  const auto once = nsdpp::conditional_kernel(nsdpp::conditional_kernel(l, {1}), {2}); // global item 3
  const auto direct = nsdpp::conditional_kernel(l, {1, 3});
  EXPECT_EQ(once.index_map(), direct.index_map());
  EXPECT_LE((once.entries() - direct.entries()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ConditionalKernel, SingularSubsetNamesGlobalItems) {
  const auto l = nsdpp::assemble_L(LowRankParams::symmetric(Matrix::Ones(4, 1)));
  try {
    nsdpp::conditional_kernel(l, {1, 2});
    FAIL() << "expected ConditioningError";
  } catch (const nsdpp::ConditioningError &e) {
    EXPECT_EQ(e.subset(), (Subset{1, 2}));
  }
  const auto once = nsdpp::conditional_kernel(l, {0});
  try {
    nsdpp::conditional_kernel(once, {1, 2});
    FAIL() << "expected ConditioningError";
  } catch (const nsdpp::ConditioningError &e) {
    EXPECT_EQ(e.subset(), (Subset{2, 3}));
  }
}

TEST(PairCorrelation, SignsAndErrors) {
  Matrix k(2, 2);
  k << 0.5, 0.3, 0.3, 0.5;
  EXPECT_NEAR(nsdpp::pair_correlation({k, KernelRole::Marginal}, 0, 1), -0.09, 1e-15);
  k(1, 0) = -0.2;
  EXPECT_NEAR(nsdpp::pair_correlation({k, KernelRole::Marginal}, 0, 1), 0.06, 1e-15);
  k(0, 1) = 0.0;
  EXPECT_EQ(nsdpp::pair_correlation({k, KernelRole::Marginal}, 0, 1), 0.0);
  EXPECT_THROW(nsdpp::pair_correlation({k, KernelRole::Marginal}, 1, 1), nsdpp::DomainError);
}

TEST(SymmetricReduction, ZeroSkewFactorsGiveSymmetricKernel) {
  std::mt19937_64 rng(9);
  const Matrix v = oracle::random_matrix(rng, 6, 3);
  const auto l = nsdpp::assemble_L(LowRankParams::symmetric(v, 2));
  EXPECT_EQ(l.entries(), l.entries().transpose());
  EXPECT_LE((l.entries() - v * v.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

} // namespace

// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "nsdpp/kernel.hpp"
#include "nsdpp/matrix_analysis.hpp"
#include "oracles.hpp"

namespace {

using nsdpp::Matrix;
using nsdpp::Subset;

TEST(DecomposeSymSkew, SymmetricInputHasZeroSkew) {
  Matrix m(2, 2);
  m << 1, 2, 2, 3;
  const auto d = nsdpp::decompose_sym_skew(m);
  EXPECT_EQ(d.symmetric, m);
  EXPECT_EQ(d.skew, Matrix(Matrix::Zero(2, 2)));
}

TEST(DecomposeSymSkew, PureSkewInput) {
  Matrix m(2, 2);
  m << 0, 1, -1, 0;
  const auto d = nsdpp::decompose_sym_skew(m);
  EXPECT_EQ(d.symmetric, Matrix(Matrix::Zero(2, 2)));
  EXPECT_EQ(d.skew, m);
}

TEST(DecomposeSymSkew, ExactOnDyadicEntries) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> k(-64, 64);
  Matrix m(6, 6);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j)
      m(i, j) = k(rng) / 8.0;
  const auto d = nsdpp::decompose_sym_skew(m);
  EXPECT_EQ(d.symmetric + d.skew, m);
  EXPECT_EQ(d.skew.transpose(), Matrix(-d.skew));
  EXPECT_EQ(d.symmetric.transpose(), d.symmetric);
}

TEST(DecomposeSymSkew, RandomReconstructionWithinRounding) {
  std::mt19937_64 rng(12);
  const Matrix m = oracle::random_matrix(rng, 6, 6);
  const auto d = nsdpp::decompose_sym_skew(m);
  EXPECT_LE((d.symmetric + d.skew - m).cwiseAbs().maxCoeff(), 4 * std::numeric_limits<double>::epsilon());
  EXPECT_EQ(d.skew.transpose(), Matrix(-d.skew));
}

TEST(DecomposeSymSkew, NonSquareThrows) {
  EXPECT_THROW(nsdpp::decompose_sym_skew(Matrix::Ones(2, 3)), nsdpp::DomainError);
}

TEST(Classify, IdentityIsP) {
  const auto r = nsdpp::classify(Matrix::Identity(3, 3));
  EXPECT_TRUE(r.is_P);
  EXPECT_TRUE(r.is_P0);
  EXPECT_TRUE(r.symmetric_part_psd);
  EXPECT_FALSE(r.witness_subset);
}

TEST(Classify, PureSkewIsP0NotP) {
  Matrix m(2, 2);
  m << 0, 1, -1, 0;
  const auto minors = nsdpp::principal_minors(m);
  ASSERT_EQ(minors.size(), 3u);
  EXPECT_EQ(minors[0], 0.0);
  EXPECT_EQ(minors[1], 0.0);
  EXPECT_NEAR(minors[2], 1.0, 1e-15);
  const auto r = nsdpp::classify(m);
  EXPECT_TRUE(r.is_P0);
  EXPECT_FALSE(r.is_P);
}

TEST(Classify, IndefiniteTwoByTwoWitness) {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  const auto r = nsdpp::classify(m);
  EXPECT_FALSE(r.is_P0);
  ASSERT_TRUE(r.witness_subset);
  EXPECT_EQ(*r.witness_subset, (Subset{0, 1}));
  EXPECT_NEAR(r.min_principal_minor, -3.0, 1e-12);
  EXPECT_FALSE(r.symmetric_part_psd);
}

TEST(Classify, TooLargeIsCapabilityError) {
  EXPECT_THROW(nsdpp::classify(Matrix::Identity(17, 17)), nsdpp::CapabilityError);
}

TEST(Classify, ReportInvariantsHold) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 200; ++t) {
    const Matrix m = oracle::random_matrix(rng, 4, 4);
    const auto r = nsdpp::classify(m);
    if (r.is_P) {
      EXPECT_TRUE(r.is_P0);
    }
    if (r.symmetric_part_psd) {
      EXPECT_TRUE(r.is_P0);
    }
    EXPECT_EQ(r.witness_subset.has_value(), !r.is_P0);
    if (r.witness_subset) {
      EXPECT_NEAR(oracle::minor(m, *r.witness_subset), r.min_principal_minor, 1e-12);
    }
  }
}

TEST(Classify, AgreesWithCofactorOracleUpToFive) {
  std::mt19937_64 rng(14);
  for (Eigen::Index n = 1; n <= 5; ++n) {
    for (int t = 0; t < 20; ++t) {
      const Matrix m = oracle::random_matrix(rng, n, n);
      const auto minors = nsdpp::principal_minors(m);
      double lo = 1e300;
      for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        const double ref = oracle::cofactor_det(oracle::sub(m, oracle::from_mask(mask, static_cast<std::size_t>(n))));
        EXPECT_NEAR(minors[mask - 1], ref, 1e-10 * std::max(1.0, std::abs(ref)));
        lo = std::min(lo, ref);
      }
      EXPECT_EQ(nsdpp::classify(m).is_P0, lo >= -nsdpp::kMinorTolerance);
    }
  }
}

TEST(Classify, AssembledKernelsAreAlwaysP0) {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<int> msz(1, 8), rk(1, 4);
  for (int t = 0; t < 1000; ++t) {
    const int m = msz(rng), dp = rk(rng);
    const auto l = nsdpp::assemble_L(nsdpp::LowRankParams(oracle::random_matrix(rng, m, rk(rng)),
                                                          oracle::random_matrix(rng, m, dp),
                                                          oracle::random_matrix(rng, m, dp)));
    const auto r = nsdpp::classify(l.entries());
    ASSERT_TRUE(r.is_P0) << "trial " << t << " min minor " << r.min_principal_minor;
    EXPECT_TRUE(r.symmetric_part_psd);
  }
}

TEST(Classify, DiagonalPlusSkewIsP0) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> pos(0.1, 2.0);
  for (int t = 0; t < 50; ++t) {
    const Matrix g = oracle::random_matrix(rng, 6, 6);
    Matrix m = g - g.transpose();
    for (Eigen::Index i = 0; i < 6; ++i)
      m(i, i) = pos(rng);
    EXPECT_TRUE(nsdpp::classify(m).is_P0);
  }
}

TEST(SignPattern, SymmetricAndSkewAndUnsigned) {
  Matrix s(3, 3);
  s << 1, 2, -3, 2, 1, 4, -3, 4, 1;
  const auto ps = nsdpp::check_sign_pattern(s);
  ASSERT_TRUE(ps);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      if (i != j) {
        EXPECT_EQ((*ps)(i, j), 1);
      }

  Matrix a(3, 3);
  a << 2, 1, -5, -1, 2, 3, 5, -3, 2;
  const auto pa = nsdpp::check_sign_pattern(a);
  ASSERT_TRUE(pa);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      if (i != j) {
        EXPECT_EQ((*pa)(i, j), -1);
      }

  Matrix u(2, 2);
  u << 1, 2, 3, 1;
  EXPECT_FALSE(nsdpp::check_sign_pattern(u));
}

TEST(SignPattern, ZeroPairIsUnconstrained) {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 1) = 0.5;
  m(1, 0) = -0.5;
  const auto p = nsdpp::check_sign_pattern(m);
  ASSERT_TRUE(p);
  EXPECT_EQ((*p)(0, 1), -1);
  EXPECT_EQ((*p)(0, 2), 0);
}

TEST(Irreducibility, StrongConnectivity) {
  Matrix chain = Matrix::Identity(3, 3);
  chain(0, 1) = chain(1, 2) = 1.0;
  EXPECT_FALSE(nsdpp::is_irreducible(chain)); // no path back to 0
  chain(2, 0) = 1.0;
  EXPECT_TRUE(nsdpp::is_irreducible(chain));
  EXPECT_FALSE(nsdpp::is_irreducible(Matrix::Identity(2, 2)));
  EXPECT_TRUE(nsdpp::is_irreducible(Matrix::Identity(1, 1)));
}

TEST(BlockComponents, PermutedBlockDiagonal) {
  Matrix m = Matrix::Identity(4, 4);
  m(0, 2) = m(2, 0) = 0.3;
  m(1, 3) = 0.7;
  const auto b = nsdpp::block_components(m);
  EXPECT_EQ(b, (std::vector<nsdpp::Index>{0, 1, 0, 1}));
}

} // namespace

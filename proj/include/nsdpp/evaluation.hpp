// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Next-item prediction (mean percentile rank), AUC, bootstrap intervals,
/// pairwise correlation summaries and plot-ready grids.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nsdpp/kernel.hpp"
#include "nsdpp/synthetic.hpp"

namespace nsdpp {

/// Diagonal of the conditional kernel L^J, indexed by item: for i not in J,
/// score_i = L_ii - L_{i,J} (L_J + eps I)^{-1} L_{J,i} = det(L_{J+i}) / det(L_J).
/// Items in J get -inf.
inline std::vector<double> next_item_scores(const DenseKernel &l, const Subset &j, double epsilon = 0.0) {
  if (l.role() != KernelRole::LEnsemble)
    throw DomainError("next_item_scores expects an L-ensemble");
  if (j.empty())
    throw DomainError("next_item_scores needs a nonempty conditioning set");
  check_subset(j, l.size());
  const Index m = l.size();
  const Matrix &e = l.entries();
  Eigen::MatrixXd lj = principal(e, j);
  lj.diagonal().array() += epsilon;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(lj);
  const double rc = lu.rcond();
  if (!(rc > 1e-14))
    throw ConditioningError(j, condition_number(rc));

  const Subset rest = complement(j, m);
  const Eigen::MatrixXd cols = submatrix(e, j, rest); // L_{J, rest}
  const Eigen::MatrixXd rows = submatrix(e, rest, j); // L_{rest, J}
  const Eigen::MatrixXd solved = lu.solve(cols);
  std::vector<double> scores(m, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < rest.size(); ++r) {
    const auto k = static_cast<Eigen::Index>(r);
    const auto i = static_cast<Eigen::Index>(rest[r]);
    scores[rest[r]] = e(i, i) - rows.row(k).dot(solved.col(k));
  }
  return scores;
}

/// Percentage of items outside J scored no higher than the held-out item.
inline double percentile_rank(const std::vector<double> &scores, const Subset &j, Index held_out) {
  const Subset rest = complement(j, scores.size());
  std::size_t beaten = 0;
  for (Index i : rest)
    if (scores[held_out] >= scores[i])
      ++beaten;
  return 100.0 * static_cast<double>(beaten) / static_cast<double>(rest.size());
}

using NextItemScorer = std::function<std::vector<double>(const Subset &)>;

struct MprResult {
  double mpr = 0.0;
  std::vector<double> per_basket; // percentile ranks of evaluated baskets
  std::size_t skipped = 0;
};

/// For each basket of size >= 2, removes one item chosen by a seeded stream
/// (one draw per basket, so skipped baskets do not shift later choices) and
/// ranks it against every item outside the remaining set.
inline MprResult mpr(const NextItemScorer &scorer, Index catalog_size, const std::vector<Subset> &baskets,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MprResult out;
  for (const auto &basket : baskets) {
    if (basket.size() < 2) {
      ++out.skipped;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, basket.size() - 1);
    const std::size_t pos = pick(rng);
    const Index held = basket[pos];
    Subset j = basket;
    j.erase(j.begin() + static_cast<std::ptrdiff_t>(pos));
    std::vector<double> scores;
    try {
      scores = scorer(j);
    } catch (const NumericalError &) {
      ++out.skipped;
      continue;
    }
    if (scores.size() != catalog_size)
      throw ConfigurationError("scorer returned the wrong number of scores");
    out.per_basket.push_back(percentile_rank(scores, j, held));
  }
  double s = 0.0;
  for (double pr : out.per_basket)
    s += pr;
  out.mpr = out.per_basket.empty() ? 0.0 : s / static_cast<double>(out.per_basket.size());
  return out;
}

inline MprResult mpr(const DenseKernel &l, const std::vector<Subset> &test_baskets, std::uint64_t seed,
                     double epsilon = 0.0) {
  return mpr([&](const Subset &j) { return next_item_scores(l, j, epsilon); }, l.size(), test_baskets, seed);
}

/// P(positive score > negative score) + 0.5 P(tie), via the rank-sum statistic.
inline double auc_from_scores(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty())
    throw DomainError("AUC needs at least one positive and one negative score");
  struct Entry {
    double score;
    bool positive;
  };
  std::vector<Entry> all;
  all.reserve(positives.size() + negatives.size());
  for (double s : positives)
    all.push_back({s, true});
  for (double s : negatives)
    all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Entry &a, const Entry &b) { return a.score < b.score; });
  double rank_sum = 0.0;
  std::size_t k = 0;
  while (k < all.size()) {
    std::size_t e = k;
    while (e < all.size() && all[e].score == all[k].score)
      ++e;
    const double mid_rank = 0.5 * static_cast<double>(k + 1 + e); // average 1-based rank of the tie block
    for (std::size_t t = k; t < e; ++t)
      if (all[t].positive)
        rank_sum += mid_rank;
    k = e;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  return (rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

/// One random negative per positive: |J+| distinct items drawn uniformly.
inline std::vector<Subset> generate_negatives(const std::vector<Subset> &positives, Index catalog_size,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> item(0, catalog_size - 1);
  std::vector<Subset> out;
  out.reserve(positives.size());
  for (const auto &p : positives) {
    if (p.size() > catalog_size)
      throw DomainError("positive subset larger than the catalog");
    Subset neg;
    while (neg.size() < p.size()) {
      const Index i = item(rng);
      if (std::find(neg.begin(), neg.end(), i) == neg.end())
        neg.push_back(i);
    }
    normalize_subset(neg);
    out.push_back(std::move(neg));
  }
  return out;
}

struct AucResult {
  double auc = 0.0;
  std::vector<double> positive_scores;
  std::vector<double> negative_scores;
};

/// Subset discrimination scored by log P_L(J).
inline AucResult auc(const DenseKernel &l, const std::vector<Subset> &positives,
                     const std::vector<Subset> &negatives, double epsilon = 0.0) {
  if (positives.empty())
    throw DomainError("AUC needs positive subsets");
  const double z = log_normalizer(l);
  AucResult r;
  for (const auto &p : positives)
    r.positive_scores.push_back(log_subset_prob(l, p, epsilon, z).log_prob);
  for (const auto &n : negatives)
    r.negative_scores.push_back(log_subset_prob(l, n, epsilon, z).log_prob);
  r.auc = auc_from_scores(r.positive_scores, r.negative_scores);
  return r;
}

inline AucResult auc(const DenseKernel &l, const std::vector<Subset> &positives, std::uint64_t seed,
                     double epsilon = 0.0) {
  return auc(l, positives, generate_negatives(positives, l.size(), seed), epsilon);
}

/// Pair discrimination against oracle labels, scoring each pair by det(K_{ij}).
inline AucResult pair_auc(const DenseKernel &k, const std::vector<LabeledPair> &labels) {
  AucResult r;
  for (const auto &p : labels) {
    if (p.i >= k.size() || p.j >= k.size() || p.i == p.j)
      throw DataError("label pair (" + std::to_string(p.i) + ", " + std::to_string(p.j) +
                      ") is not a pair of catalog items");
    (p.positive ? r.positive_scores : r.negative_scores).push_back(pair_marginal(k, p.i, p.j));
  }
  r.auc = auc_from_scores(r.positive_scores, r.negative_scores);
  return r;
}

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {

/// 2.5% and 97.5% quantiles with linear interpolation between order statistics.
inline ConfidenceInterval percentile_interval(std::vector<double> stats) {
  if (stats.empty())
    throw DomainError("bootstrap needs at least one replicate");
  std::sort(stats.begin(), stats.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(stats.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, stats.size() - 1);
    return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  };
  return {quantile(0.025), quantile(0.975)};
}

} // namespace detail

/// Percentile bootstrap: resample `samples` with replacement `n_boot` times,
/// evaluate `metric` on each resample, report the 2.5% / 97.5% quantiles.
template <typename T, typename Metric>
ConfidenceInterval bootstrap_ci(std::span<const T> samples, Metric &&metric, std::size_t n_boot = 1000,
                                std::uint64_t seed = 0) {
  if (samples.empty())
    throw DomainError("bootstrap needs at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<double> stats;
  stats.reserve(n_boot);
  std::vector<T> resample(samples.size());
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (auto &x : resample)
      x = samples[pick(rng)];
    stats.push_back(metric(std::span<const T>(resample)));
  }
  return detail::percentile_interval(std::move(stats));
}

inline double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs)
    s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

/// Bootstrap over (positive, negative) score pairs; unpaired extras are ignored.
inline ConfidenceInterval auc_bootstrap_ci(const AucResult &r, std::size_t n_boot, std::uint64_t seed) {
  const std::size_t n = std::min(r.positive_scores.size(), r.negative_scores.size());
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t k = 0; k < n; ++k)
    pairs.emplace_back(r.positive_scores[k], r.negative_scores[k]);
  return bootstrap_ci(std::span<const std::pair<double, double>>(pairs),
                      [](std::span<const std::pair<double, double>> s) {
                        std::vector<double> p, q;
                        for (const auto &[a, b] : s) {
                          p.push_back(a);
                          q.push_back(b);
                        }
                        return auc_from_scores(p, q);
                      },
                      n_boot, seed);
}

/// Bootstrap over positives and negatives resampled independently.
inline ConfidenceInterval pair_auc_bootstrap_ci(const AucResult &r, std::size_t n_boot, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto &p = r.positive_scores;
  const auto &q = r.negative_scores;
  std::uniform_int_distribution<std::size_t> pp(0, p.size() - 1), pq(0, q.size() - 1);
  std::vector<double> stats;
  std::vector<double> rp(p.size()), rq(q.size());
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (auto &x : rp)
      x = p[pp(rng)];
    for (auto &x : rq)
      x = q[pq(rng)];
    stats.push_back(auc_from_scores(rp, rq));
  }
  return detail::percentile_interval(std::move(stats));
}

struct CorrelationSummary {
  std::vector<std::string> categories;
  /// fraction(a, b): share of item pairs (one in a, one in b) with positive correlation.
  Matrix fraction;
};

inline CorrelationSummary correlation_summary(const DenseKernel &k, const std::vector<std::string> &category_of) {
  if (category_of.size() != k.size())
    throw DataError("category map does not cover the catalog");
  std::vector<Index> missing;
  for (Index i = 0; i < category_of.size(); ++i)
    if (category_of[i].empty())
      missing.push_back(i);
  if (!missing.empty()) {
    std::string list;
    for (std::size_t t = 0; t < missing.size() && t < 20; ++t)
      list += (t ? "," : "") + std::to_string(missing[t]);
    throw DataError(std::to_string(missing.size()) + " uncategorized items: " + list +
                    (missing.size() > 20 ? ",..." : ""));
  }
  std::map<std::string, Index> idx;
  for (const auto &c : category_of)
    idx.emplace(c, 0);
  CorrelationSummary out;
  for (auto &[name, id] : idx) {
    id = out.categories.size();
    out.categories.push_back(name);
  }
  const auto nc = static_cast<Eigen::Index>(out.categories.size());
  Matrix pos = Matrix::Zero(nc, nc), total = Matrix::Zero(nc, nc);
  for (Index i = 0; i < k.size(); ++i) {
    for (Index j = i + 1; j < k.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(idx[category_of[i]]);
      const auto b = static_cast<Eigen::Index>(idx[category_of[j]]);
      const double c = pair_correlation(k, i, j) > 0 ? 1.0 : 0.0;
      pos(a, b) += c;
      total(a, b) += 1.0;
      if (a != b) {
        pos(b, a) += c;
        total(b, a) += 1.0;
      }
    }
  }
  out.fraction = Matrix::Zero(nc, nc);
  for (Eigen::Index a = 0; a < nc; ++a)
    for (Eigen::Index b = 0; b < nc; ++b)
      out.fraction(a, b) = total(a, b) > 0 ? pos(a, b) / total(a, b) : 0.0;
  return out;
}

/// Plot grid: off-diagonal (i, j) holds K_ij * det(K_{ij}); the diagonal holds K_ii.
inline Matrix transformed_marginal(const DenseKernel &k) {
  const auto m = static_cast<Eigen::Index>(k.size());
  Matrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      g(i, j) = i == j ? k.entries()(i, i)
                       : k.entries()(i, j) * pair_marginal(k, static_cast<Index>(i), static_cast<Index>(j));
  return g;
}

/// |det(K_{ij}) - oracle volume_ij| per pair; zero diagonal.
inline Matrix pair_error_grid(const DenseKernel &k, const Matrix &oracle_volume) {
  const auto m = static_cast<Eigen::Index>(k.size());
  if (oracle_volume.rows() != m || oracle_volume.cols() != m)
    throw DataError("oracle volume grid does not match the catalog size");
  Matrix g = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j)
        g(i, j) = std::abs(pair_marginal(k, static_cast<Index>(i), static_cast<Index>(j)) - oracle_volume(i, j));
  return g;
}

/// Whitespace-separated dense grid, one row per line, 17 significant digits.
inline void write_grid(const Matrix &g, std::ostream &out) {
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      out << (j ? "\t" : "") << g(i, j);
    out << '\n';
  }
  out.precision(old);
}

inline Matrix read_grid(std::istream &in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double x;
    while (ss >> x)
      row.push_back(x);
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n)
      throw DataError("grid is not square");
    for (Eigen::Index j = 0; j < n; ++j)
      g(i, j) = rows[i][j];
  }
  return g;
}

struct EvalReport {
  std::optional<double> mpr;
  std::optional<ConfidenceInterval> mpr_ci;
  std::optional<double> auc;
  std::optional<ConfidenceInterval> auc_ci;
  std::string auc_kind; // "subset" or "pair"
  std::size_t n_test = 0;
  std::size_t skipped = 0;
  std::optional<CorrelationSummary> correlation;
};

/// key=value lines with fixed precision so reruns diff byte-for-byte.
inline void write_report(const EvalReport &r, std::ostream &out) {
  const auto old_flags = out.flags();
  const auto old_prec = out.precision(10);
  out << std::fixed;
  out << "n_test=" << r.n_test << '\n';
  out << "skipped=" << r.skipped << '\n';
  if (r.mpr) {
    out << "mpr=" << *r.mpr << '\n';
    if (r.mpr_ci)
      out << "mpr_ci_lo=" << r.mpr_ci->lo << "\nmpr_ci_hi=" << r.mpr_ci->hi << '\n';
  }
  if (r.auc) {
    out << "auc_kind=" << r.auc_kind << '\n';
    out << "auc=" << *r.auc << '\n';
    if (r.auc_ci)
      out << "auc_ci_lo=" << r.auc_ci->lo << "\nauc_ci_hi=" << r.auc_ci->hi << '\n';
  }
  if (r.correlation) {
    const auto &c = *r.correlation;
    for (std::size_t a = 0; a < c.categories.size(); ++a)
      for (std::size_t b = 0; b < c.categories.size(); ++b)
        out << "positive_correlation_fraction[" << c.categories[a] << "," << c.categories[b]
            << "]=" << c.fraction(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) << '\n';
  }
  out.flags(old_flags);
  out.precision(old_prec);
}

} // namespace nsdpp

// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Policy-driven basket generator with disjoint item groups.
///
/// Items are split into `n_disjoint_groups` contiguous groups of near-equal
/// size. Basket k is drawn from group k mod G: `basket_size` distinct items
/// sampled sequentially without replacement from the group's categorical
/// popularity distribution (uniform, or Zipf with weight 1/rank within the
/// group). The oracle's ground-truth volume for a pair is the probability
/// that a basket drawn by this policy contains both items; cross-group pairs
/// have volume 0 and are always negative.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nsdpp/dataset.hpp"

namespace nsdpp {

enum class Popularity { Uniform, Zipf };

struct OracleSpec {
  Index catalog_size = 100;
  std::size_t n_baskets = 100;
  std::size_t basket_size = 6;
  std::size_t n_disjoint_groups = 1;
  Popularity popularity = Popularity::Uniform;
  std::uint64_t seed = 0;
  /// Within-group pairs are positive iff their volume is >= this (and > 0).
  double auc_threshold = 0.0;
  /// Resample any basket that repeats an earlier one.
  bool unique_baskets = false;
  /// Monte Carlo draws used to estimate volumes for nonuniform popularity.
  std::size_t volume_samples = 200000;

  /// Presets for the three experimental regimes: 1 = one group with Zipf
  /// popularity and broad pair coverage; 2 = 14 uniform groups; 3 = three
  /// Zipf groups. All use 100 items and 100 baskets of six items.
  static OracleSpec regime(int r) {
    OracleSpec s;
    switch (r) {
    case 1:
      s.n_disjoint_groups = 1;
      s.popularity = Popularity::Zipf;
      s.unique_baskets = true;
      // Positive iff the pair is expected to co-occur at least once in the data.
      s.auc_threshold = 1.0 / static_cast<double>(s.n_baskets);
      break;
    case 2:
      s.n_disjoint_groups = 14;
      s.popularity = Popularity::Uniform;
      break;
    case 3:
      s.n_disjoint_groups = 3;
      s.popularity = Popularity::Zipf;
      break;
    default:
      throw ConfigurationError("unknown regime " + std::to_string(r) + " (expected 1, 2 or 3)");
    }
    return s;
  }

  /// Item index -> group index.
  std::vector<Index> groups() const {
    if (n_disjoint_groups < 1 || n_disjoint_groups > catalog_size)
      throw ConfigurationError("need between 1 and M disjoint groups");
    std::vector<Index> g(catalog_size);
    const Index base = catalog_size / n_disjoint_groups;
    const Index extra = catalog_size % n_disjoint_groups;
    Index item = 0;
    for (Index k = 0; k < n_disjoint_groups; ++k) {
      const Index size = base + (k < extra ? 1 : 0);
      for (Index t = 0; t < size; ++t)
        g[item++] = k;
    }
    return g;
  }

  /// Categorical weights, normalized to sum to one within each group.
  std::vector<double> weights() const {
    const auto g = groups();
    std::vector<double> w(catalog_size);
    std::vector<Index> rank_in_group(n_disjoint_groups, 0);
    std::vector<double> total(n_disjoint_groups, 0.0);
    for (Index i = 0; i < catalog_size; ++i) {
      const Index r = ++rank_in_group[g[i]];
      w[i] = popularity == Popularity::Zipf ? 1.0 / static_cast<double>(r) : 1.0;
      total[g[i]] += w[i];
    }
    for (Index i = 0; i < catalog_size; ++i)
      w[i] /= total[g[i]];
    return w;
  }

  void validate() const {
    if (catalog_size < 1 || n_baskets < 1 || basket_size < 1)
      throw ConfigurationError("catalog size, basket count and basket size must be positive");
    if (n_disjoint_groups < 1 || n_disjoint_groups > catalog_size)
      throw ConfigurationError("need between 1 and M disjoint groups");
    const Index smallest = catalog_size / n_disjoint_groups;
    if (basket_size > smallest)
      throw ConfigurationError("basket size " + std::to_string(basket_size) +
                               " exceeds the smallest group (" + std::to_string(smallest) + " items)");
  }
};

struct LabeledPair {
  Index i = 0;
  Index j = 0;
  bool positive = false;
};

struct LabeledPairs {
  std::vector<Subset> positives;
  std::vector<Subset> negatives;
  /// Oracle probability that a generated basket contains both items (M x M, zero diagonal).
  Matrix ground_truth_volume;

  std::vector<LabeledPair> as_list() const {
    std::vector<LabeledPair> out;
    for (const auto &p : positives)
      out.push_back({p[0], p[1], true});
    for (const auto &p : negatives)
      out.push_back({p[0], p[1], false});
    std::sort(out.begin(), out.end(), [](const LabeledPair &a, const LabeledPair &b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    return out;
  }
};

struct SyntheticData {
  BasketDataset dataset;
  LabeledPairs labels;
  std::vector<Index> group_of;
  std::vector<double> weights;
};

namespace detail {

template <typename Rng>
Subset draw_basket(const std::vector<Index> &members, const std::vector<double> &w, std::size_t k, Rng &rng) {
  std::vector<double> remaining(members.size());
  for (std::size_t t = 0; t < members.size(); ++t)
    remaining[t] = w[members[t]];
  Subset basket;
  basket.reserve(k);
  for (std::size_t d = 0; d < k; ++d) {
    std::discrete_distribution<std::size_t> pick(remaining.begin(), remaining.end());
    const std::size_t t = pick(rng);
    basket.push_back(members[t]);
    remaining[t] = 0.0;
  }
  normalize_subset(basket);
  return basket;
}

inline std::vector<std::vector<Index>> members_by_group(const std::vector<Index> &g, std::size_t n_groups) {
  std::vector<std::vector<Index>> out(n_groups);
  for (Index i = 0; i < g.size(); ++i)
    out[g[i]].push_back(i);
  return out;
}

} // namespace detail

/// Probability that a basket drawn by the policy contains both i and j.
/// Exact for uniform popularity; Monte Carlo (seeded) otherwise.
inline Matrix oracle_pair_volumes(const OracleSpec &spec) {
  spec.validate();
  const auto g = spec.groups();
  const auto w = spec.weights();
  const auto members = detail::members_by_group(g, spec.n_disjoint_groups);
  const auto m = static_cast<Eigen::Index>(spec.catalog_size);
  Matrix vol = Matrix::Zero(m, m);

  std::vector<double> group_share(spec.n_disjoint_groups, 0.0);
  for (std::size_t b = 0; b < spec.n_baskets; ++b)
    group_share[b % spec.n_disjoint_groups] += 1.0 / static_cast<double>(spec.n_baskets);

  const double k = static_cast<double>(spec.basket_size);
  for (std::size_t grp = 0; grp < spec.n_disjoint_groups; ++grp) {
    const auto &mem = members[grp];
    const double s = static_cast<double>(mem.size());
    if (spec.popularity == Popularity::Uniform) {
      const double p = s > 1 ? k * (k - 1) / (s * (s - 1)) : 0.0;
      for (Index a : mem)
        for (Index b : mem)
          if (a != b)
            vol(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = group_share[grp] * p;
      continue;
    }
    std::mt19937_64 rng(spec.seed ^ (0x9E3779B97F4A7C15ull * (grp + 1)));
    Matrix counts = Matrix::Zero(m, m);
    for (std::size_t t = 0; t < spec.volume_samples; ++t) {
      const Subset y = detail::draw_basket(mem, w, spec.basket_size, rng);
      for (std::size_t x = 0; x < y.size(); ++x)
        for (std::size_t z = x + 1; z < y.size(); ++z)
          counts(static_cast<Eigen::Index>(y[x]), static_cast<Eigen::Index>(y[z])) += 1.0;
    }
    const double scale = group_share[grp] / static_cast<double>(spec.volume_samples);
    for (Index a : mem)
      for (Index b : mem)
        if (a < b) {
          const double v = scale * counts(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
          vol(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
          vol(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
        }
  }
  return vol;
}

namespace detail {
inline bool label_from(const std::vector<Index> &g, const Matrix &vol, double threshold, Index i, Index j) {
  if (g[i] != g[j])
    return false;
  if (threshold <= 0.0)
    return true;
  return vol(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >= threshold;
}
} // namespace detail

/// Negative iff i and j lie in different groups, or (with a positive
/// threshold) their oracle volume falls below it.
inline bool pair_label(const OracleSpec &spec, Index i, Index j) {
  if (i == j)
    throw DomainError("pair_label needs two distinct items");
  if (i >= spec.catalog_size || j >= spec.catalog_size)
    throw DomainError("pair_label: item out of range");
  const auto g = spec.groups();
  if (g[i] != g[j])
    return false;
  if (spec.auc_threshold <= 0.0)
    return true;
  return detail::label_from(g, oracle_pair_volumes(spec), spec.auc_threshold, i, j);
}

inline SyntheticData generate(const OracleSpec &spec) {
  spec.validate();
  SyntheticData out;
  out.group_of = spec.groups();
  out.weights = spec.weights();
  const auto members = detail::members_by_group(out.group_of, spec.n_disjoint_groups);

  std::mt19937_64 rng(spec.seed);
  std::set<Subset> seen;
  std::vector<Subset> baskets;
  baskets.reserve(spec.n_baskets);
  for (std::size_t b = 0; b < spec.n_baskets; ++b) {
    const auto &mem = members[b % spec.n_disjoint_groups];
    Subset y = detail::draw_basket(mem, out.weights, spec.basket_size, rng);
    if (spec.unique_baskets) {
      for (int attempt = 0; attempt < 1000 && seen.count(y); ++attempt)
        y = detail::draw_basket(mem, out.weights, spec.basket_size, rng);
      seen.insert(y);
    }
    baskets.push_back(std::move(y));
  }
  out.dataset = make_dataset(spec.catalog_size, std::move(baskets));

  out.labels.ground_truth_volume = oracle_pair_volumes(spec);
  for (Index i = 0; i < spec.catalog_size; ++i)
    for (Index j = i + 1; j < spec.catalog_size; ++j) {
      if (detail::label_from(out.group_of, out.labels.ground_truth_volume, spec.auc_threshold, i, j))
        out.labels.positives.push_back({i, j});
      else
        out.labels.negatives.push_back({i, j});
    }
  return out;
}

/// One line per pair: "i<TAB>j<TAB>+" or "i<TAB>j<TAB>-".
inline void write_labels(const LabeledPairs &labels, std::ostream &out) {
  for (const auto &p : labels.as_list())
    out << p.i << '\t' << p.j << '\t' << (p.positive ? '+' : '-') << '\n';
}

inline std::vector<LabeledPair> read_labels(std::istream &in) {
  std::vector<LabeledPair> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream ss(line);
    std::string a, b, lab;
    if (!std::getline(ss, a, '\t') || !std::getline(ss, b, '\t') || !std::getline(ss, lab))
      throw ParseError("expected i<TAB>j<TAB>label", line_no);
    LabeledPair p;
    try {
      p.i = static_cast<Index>(std::stoull(a));
      p.j = static_cast<Index>(std::stoull(b));
    } catch (...) {
      throw ParseError("pair indices must be integers", line_no);
    }
    const std::string l = detail::trim(lab);
    if (l == "+")
      p.positive = true;
    else if (l == "-" || l == "\xE2\x88\x92") // ASCII hyphen or U+2212
      p.positive = false;
    else
      throw ParseError("label must be + or -", line_no);
    out.push_back(p);
  }
  return out;
}

} // namespace nsdpp

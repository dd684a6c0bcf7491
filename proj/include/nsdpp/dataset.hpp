// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Basket files: one basket per line, comma-separated item IDs. External IDs
/// are mapped to indices in order of first appearance. A leading comment
/// line `# nsdpp catalog_size=N` switches to index mode, where IDs are the
/// integers 0..N-1 themselves (used by the synthetic generator so that items
/// which never occur still keep their slot).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "nsdpp/errors.hpp"
#include "nsdpp/types.hpp"

namespace nsdpp {

enum class Split : std::uint8_t { Train, Validation, Test };

inline const char *split_name(Split s) {
  switch (s) {
  case Split::Train:
    return "train";
  case Split::Validation:
    return "validation";
  case Split::Test:
    return "test";
  }
  return "?";
}

struct LoadStats {
  std::size_t lines = 0;
  std::size_t dropped_oversized = 0;
  std::size_t dropped_small = 0; // empty and singleton baskets
  std::size_t duplicates_removed = 0;
};

struct LoadOptions {
  std::optional<std::size_t> max_basket_size;
  std::size_t min_basket_size = 2;
};

struct BasketDataset {
  Index catalog_size = 0;
  std::vector<Subset> baskets;
  /// Occurrence counts over the train split; 0 for items never seen there.
  std::vector<std::size_t> lambda;
  std::vector<Split> splits;
  /// External ID of each item index.
  std::vector<std::string> item_ids;
  bool index_ids = false;
  LoadStats stats;

  std::vector<Subset> baskets_in(Split s) const {
    std::vector<Subset> out;
    for (std::size_t b = 0; b < baskets.size(); ++b)
      if (splits[b] == s)
        out.push_back(baskets[b]);
    return out;
  }

  std::size_t count(Split s) const {
    return static_cast<std::size_t>(std::count(splits.begin(), splits.end(), s));
  }

  std::size_t max_basket_size() const {
    std::size_t k = 0;
    for (const auto &b : baskets)
      k = std::max(k, b.size());
    return k;
  }

  std::optional<Index> find_item(const std::string &id) const {
    auto it = std::find(item_ids.begin(), item_ids.end(), id);
    if (it == item_ids.end())
      return std::nullopt;
    return static_cast<Index>(it - item_ids.begin());
  }

  /// Lambda with never-seen items set to 1.
  std::vector<std::size_t> lambda_or_one() const {
    std::vector<std::size_t> out = lambda;
    for (auto &l : out)
      if (l == 0)
        l = 1;
    return out;
  }
};

/// Recomputes lambda from the baskets currently assigned to Split::Train.
inline void recompute_item_counts(BasketDataset &ds) {
  ds.lambda.assign(ds.catalog_size, 0);
  for (std::size_t b = 0; b < ds.baskets.size(); ++b)
    if (ds.splits[b] == Split::Train)
      for (Index i : ds.baskets[b])
        ++ds.lambda[i];
}

/// Builds a dataset whose items are the indices 0..M-1; every basket starts in Train.
inline BasketDataset make_dataset(Index catalog_size, std::vector<Subset> baskets) {
  BasketDataset ds;
  ds.catalog_size = catalog_size;
  for (auto &b : baskets) {
    ds.stats.duplicates_removed += normalize_subset(b);
    check_subset(b, catalog_size);
  }
  ds.baskets = std::move(baskets);
  ds.splits.assign(ds.baskets.size(), Split::Train);
  ds.item_ids.resize(catalog_size);
  for (Index i = 0; i < catalog_size; ++i)
    ds.item_ids[i] = std::to_string(i);
  ds.index_ids = true;
  recompute_item_counts(ds);
  return ds;
}

namespace detail {

inline std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::optional<Index> parse_catalog_header(const std::string &line) {
  const std::string key = "catalog_size=";
  auto pos = line.find(key);
  if (line.rfind("#", 0) != 0 || line.find("nsdpp") == std::string::npos || pos == std::string::npos)
    return std::nullopt;
  return static_cast<Index>(std::stoull(line.substr(pos + key.size())));
}

} // namespace detail

inline BasketDataset load(std::istream &in, const LoadOptions &opts = {}) {
  BasketDataset ds;
  std::unordered_map<std::string, Index> vocab;
  std::optional<Index> catalog;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    ++ds.stats.lines;
    const std::string line = detail::trim(raw);
    if (line.empty()) {
      ++ds.stats.dropped_small;
      continue;
    }
    if (line[0] == '#') {
      if (ds.baskets.empty() && !catalog)
        catalog = detail::parse_catalog_header(line);
      continue;
    }
    std::vector<std::string> tokens;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ','))
      tokens.push_back(detail::trim(tok));
    if (line.back() == ',')
      tokens.emplace_back();
    for (const auto &t : tokens)
      if (t.empty())
        throw ParseError("empty item ID", line_no);

    std::vector<std::string> unique_tokens;
    for (const auto &t : tokens) {
      if (std::find(unique_tokens.begin(), unique_tokens.end(), t) == unique_tokens.end())
        unique_tokens.push_back(t);
      else
        ++ds.stats.duplicates_removed;
    }
    if (unique_tokens.size() < opts.min_basket_size) {
      ++ds.stats.dropped_small;
      continue;
    }
    if (opts.max_basket_size && unique_tokens.size() > *opts.max_basket_size) {
      ++ds.stats.dropped_oversized;
      continue;
    }

    Subset basket;
    for (const auto &t : unique_tokens) {
      if (catalog) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
          v = std::stoull(t, &used);
        } catch (...) {
          used = 0;
        }
        if (used != t.size() || v >= *catalog)
          throw ParseError("item '" + t + "' is not an index below " + std::to_string(*catalog),
                           line_no);
        basket.push_back(static_cast<Index>(v));
      } else {
        auto [it, inserted] = vocab.emplace(t, vocab.size());
        if (inserted)
          ds.item_ids.push_back(t);
        basket.push_back(it->second);
      }
    }
    normalize_subset(basket);
    ds.baskets.push_back(std::move(basket));
  }
  if (ds.baskets.empty())
    throw DataError("no usable baskets in input");
  if (catalog) {
    ds.catalog_size = *catalog;
    ds.index_ids = true;
    ds.item_ids.resize(*catalog);
    for (Index i = 0; i < *catalog; ++i)
      ds.item_ids[i] = std::to_string(i);
  } else {
    ds.catalog_size = ds.item_ids.size();
  }
  ds.splits.assign(ds.baskets.size(), Split::Train);
  recompute_item_counts(ds);
  return ds;
}

inline BasketDataset load(const std::string &path, const LoadOptions &opts = {}) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open basket file '" + path + "'");
  return load(in, opts);
}

inline void write(const BasketDataset &ds, std::ostream &out) {
  if (ds.index_ids)
    out << "# nsdpp catalog_size=" << ds.catalog_size << '\n';
  for (const auto &b : ds.baskets) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (k)
        out << ',';
      out << ds.item_ids[b[k]];
    }
    out << '\n';
  }
}

inline void write(const BasketDataset &ds, const std::string &path) {
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write basket file '" + path + "'");
  write(ds, out);
}

/// Seeded shuffle, then the first round(train_frac * n) baskets go to train,
/// of which round(val_frac_of_train * n_train) (at least one) become validation.
inline BasketDataset split(BasketDataset ds, double train_frac = 0.8, double val_frac_of_train = 0.05,
                           std::uint64_t seed = 0) {
  if (!(train_frac > 0.0 && train_frac < 1.0) || !(val_frac_of_train > 0.0 && val_frac_of_train < 1.0))
    throw ConfigurationError("split fractions must lie in (0, 1)");
  const std::size_t n = ds.baskets.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_outer = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(val_frac_of_train * static_cast<double>(n_outer))));
  if (n_outer == 0 || n_outer >= n || n_val >= n_outer)
    throw DataError("split of " + std::to_string(n) + " baskets leaves an empty partition");

  ds.splits.assign(n, Split::Test);
  for (std::size_t k = 0; k < n_outer; ++k)
    ds.splits[order[k]] = k < n_val ? Split::Validation : Split::Train;
  recompute_item_counts(ds);
  return ds;
}

inline void write_split_manifest(const BasketDataset &ds, std::ostream &out) {
  for (std::size_t b = 0; b < ds.splits.size(); ++b)
    out << b << '\t' << split_name(ds.splits[b]) << '\n';
}

/// Applies a manifest written by write_split_manifest; every basket must be listed.
inline void read_split_manifest(std::istream &in, BasketDataset &ds) {
  std::vector<bool> seen(ds.baskets.size(), false);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#')
      continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("expected index<TAB>split", line_no);
    std::size_t b = 0;
    try {
      b = std::stoull(line.substr(0, tab));
    } catch (...) {
      throw ParseError("basket index must be an integer", line_no);
    }
    if (b >= ds.baskets.size())
      throw ParseError("basket index " + std::to_string(b) + " out of range", line_no);
    const std::string name = detail::trim(line.substr(tab + 1));
    if (name == "train")
      ds.splits[b] = Split::Train;
    else if (name == "validation")
      ds.splits[b] = Split::Validation;
    else if (name == "test")
      ds.splits[b] = Split::Test;
    else
      throw ParseError("unknown split '" + name + "'", line_no);
    seen[b] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw DataError("split manifest does not cover every basket");
  recompute_item_counts(ds);
}

inline void read_split_manifest(const std::string &path, BasketDataset &ds) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open split manifest '" + path + "'");
  read_split_manifest(in, ds);
}

/// Reads an "item<TAB>category" sidecar; returns a category name per item
/// index (empty for items the file does not mention).
inline std::vector<std::string> load_categories(std::istream &in, const BasketDataset &ds) {
  std::vector<std::string> cats(ds.catalog_size);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#')
      continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("expected item<TAB>category", line_no);
    const std::string id = detail::trim(line.substr(0, tab));
    const std::string cat = detail::trim(line.substr(tab + 1));
    if (auto idx = ds.find_item(id))
      cats[*idx] = cat;
  }
  return cats;
}

inline std::vector<std::string> load_categories(const std::string &path, const BasketDataset &ds) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open category file '" + path + "'");
  return load_categories(in, ds);
}

} // namespace nsdpp

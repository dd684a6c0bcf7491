// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

// Trains a small nonsymmetric model on synthetic baskets drawn from three
// disjoint groups, then completes a partial basket.

#include <algorithm>
#include <iostream>
#include <numeric>

#include "nsdpp/nsdpp.hpp"

int main() {
  nsdpp::OracleSpec spec = nsdpp::OracleSpec::regime(3);
  spec.seed = 11;
  const nsdpp::SyntheticData syn = nsdpp::generate(spec);
  const nsdpp::BasketDataset ds = nsdpp::split(syn.dataset, 0.8, 0.05, spec.seed);

  nsdpp::TrainConfig cfg;
  cfg.rank_sym = 10;
  cfg.rank_nonsym = 20;
  cfg.alpha = cfg.beta = cfg.gamma = 1.0;
  cfg.learning_rate = 0.1;
  cfg.max_epochs = 200;
  cfg.seed = spec.seed;
  const nsdpp::TrainTrace trace = nsdpp::fit(cfg, ds);
  std::cout << "epochs " << trace.epochs_run << ", validation log-likelihood "
            << trace.epochs.back().validation_loglik << '\n';

  const nsdpp::DenseKernel l = nsdpp::assemble_L(*trace.final_params);
  const nsdpp::Subset partial{0, 1};
  const std::vector<double> scores = nsdpp::next_item_scores(l, partial, nsdpp::kDefaultEpsilon);
  std::vector<nsdpp::Index> order(scores.size());
  std::iota(order.begin(), order.end(), nsdpp::Index{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  std::cout << "basket {0, 1} (group " << syn.group_of[0] << "), top completions:\n";
  for (std::size_t r = 0; r < 5; ++r)
    std::cout << "  item " << order[r] << "  group " << syn.group_of[order[r]] << "  score " << scores[order[r]]
              << '\n';
}

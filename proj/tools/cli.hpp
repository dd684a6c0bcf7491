// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Command implementations behind the `nsdpp` executable. `run` takes argv
/// and two streams so tests can drive every command in-process.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "nsdpp/nsdpp.hpp"

#ifndef NSDPP_VERSION
#define NSDPP_VERSION "0.0.0"
#endif
#ifndef NSDPP_GIT_REVISION
#define NSDPP_GIT_REVISION "unknown"
#endif

namespace nsdpp::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalFailure = 3, kDiagnosticFailure = 4 };

inline std::string sha256_hex(std::istream &in) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("cannot initialise SHA-256");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0)
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return hex.str();
}

inline std::string sha256_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open '" + path + "' for hashing");
  return sha256_hex(in);
}

inline std::string sha256_string(const std::string &s) {
  std::istringstream in(s);
  return sha256_hex(in);
}

/// Everything needed to rerun a command. `config_digest` covers the command,
/// config, seed and input hashes; timings are kept out of it.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, double> timings;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json stable;
    stable["command"] = command;
    stable["config"] = config;
    stable["seed"] = seed;
    stable["inputs"] = input_hashes;
    nlohmann::ordered_json j = stable;
    j["version"] = std::string(NSDPP_VERSION) + "+" + NSDPP_GIT_REVISION;
    j["config_digest"] = sha256_string(stable.dump());
    j["timings_seconds"] = timings;
    return j;
  }

  void write(const std::filesystem::path &path) const {
    std::ofstream out(path);
    if (!out)
      throw DataError("cannot write manifest '" + path.string() + "'");
    out << to_json().dump(2) << '\n';
  }
};

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Hyperparameters from the published real-data runs, plus the desk-scale
/// synthetic protocol used by the acceptance suite.
struct Preset {
  Index rank_sym;
  Index rank_nonsym;
  double alpha;
  double beta;
  double gamma;
  std::optional<std::size_t> max_basket_size;
  bool allow_small_rank;
  std::optional<double> learning_rate;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> min_epochs;
};

inline const std::map<std::string, Preset> &presets() {
  static const std::map<std::string, Preset> table{
      {"amazon-apparel", {30, 30, 0.0, 0.0, 0.0, std::nullopt, true, std::nullopt, std::nullopt, std::nullopt}},
      {"amazon-3cat", {30, 100, 0.0, 0.0, 0.0, std::nullopt, true, std::nullopt, std::nullopt, std::nullopt}},
      {"uk-retail", {100, 20, 1.0, 0.0, 0.0, 100, false, std::nullopt, std::nullopt, std::nullopt}},
      {"synthetic", {10, 20, 1.0, 1.0, 1.0, std::nullopt, false, 0.1, 300, 300}},
  };
  return table;
}

inline std::ofstream open_out(const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write '" + path.string() + "'");
  return out;
}

inline void ensure_dir(const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string preset;
  TrainConfig cfg;
  double train_frac = 0.8;
  double val_frac = 0.05;
  std::size_t max_basket_size = 0;
};

inline int cmd_train(const TrainArgs &a, const CLI::App &app, std::ostream &out) {
  Stopwatch clock;
  TrainConfig cfg = a.cfg;
  std::size_t max_basket = a.max_basket_size;
  if (!a.preset.empty()) {
    const auto &p = presets().at(a.preset);
    auto unset = [&](const char *flag) { return app.count(flag) == 0; };
    if (unset("--rank-sym"))
      cfg.rank_sym = p.rank_sym;
    if (unset("--rank-nonsym"))
      cfg.rank_nonsym = p.rank_nonsym;
    if (unset("--alpha"))
      cfg.alpha = p.alpha;
    if (unset("--beta"))
      cfg.beta = p.beta;
    if (unset("--gamma"))
      cfg.gamma = p.gamma;
    if (unset("--max-basket-size") && p.max_basket_size)
      max_basket = *p.max_basket_size;
    if (unset("--allow-small-rank"))
      cfg.allow_small_rank = p.allow_small_rank;
    if (unset("--lr") && p.learning_rate)
      cfg.learning_rate = *p.learning_rate;
    if (unset("--max-epochs") && p.max_epochs)
      cfg.max_epochs = *p.max_epochs;
    if (unset("--min-epochs") && p.min_epochs)
      cfg.min_epochs = *p.min_epochs;
  }

  LoadOptions lo;
  if (max_basket > 0)
    lo.max_basket_size = max_basket;
  BasketDataset ds = split(load(a.data, lo), a.train_frac, a.val_frac, cfg.seed);
  const TrainConfig resolved = resolve_ranks(cfg, ds);
  const double t_load = clock.seconds();
  const TrainTrace trace = fit(resolved, ds);
  const double t_fit = clock.seconds() - t_load;

  const std::filesystem::path dir(a.out);
  ensure_dir(dir);
  write_checkpoint(*trace.final_params, (dir / "model.nsdpp").string());
  {
    auto f = open_out(dir / "trace.tsv");
    write_trace(trace, f, false);
  }
  {
    auto f = open_out(dir / "split.tsv");
    write_split_manifest(ds, f);
  }
  {
    auto f = open_out(dir / "items.tsv");
    for (Index i = 0; i < ds.catalog_size; ++i)
      f << i << '\t' << ds.item_ids[i] << '\n';
  }

  RunManifest man;
  man.command = "train";
  man.seed = resolved.seed;
  man.config = {{"preset", a.preset},
                {"rank_sym", resolved.rank_sym},
                {"rank_nonsym", resolved.rank_nonsym},
                {"alpha", resolved.alpha},
                {"beta", resolved.beta},
                {"gamma", resolved.gamma},
                {"epsilon", resolved.epsilon},
                {"learning_rate", resolved.learning_rate},
                {"adam_beta1", resolved.adam_beta1},
                {"adam_beta2", resolved.adam_beta2},
                {"adam_eps", resolved.adam_eps},
                {"max_epochs", resolved.max_epochs},
                {"min_epochs", resolved.min_epochs},
                {"convergence_rel_tol", resolved.convergence_rel_tol},
                {"init_scale", resolved.init_scale},
                {"mean_mode", resolved.mean_mode},
                {"symmetric_only", resolved.symmetric_only},
                {"allow_small_rank", resolved.allow_small_rank},
                {"train_frac", a.train_frac},
                {"val_frac", a.val_frac},
                {"max_basket_size", max_basket}};
  man.input_hashes["data"] = sha256_file(a.data);
  man.timings = {{"load", t_load}, {"fit", t_fit}, {"total", clock.seconds()}};
  man.write(dir / "manifest.json");

  const auto &last = trace.epochs.back();
  out << std::setprecision(10) << std::fixed;
  out << "catalog_size=" << ds.catalog_size << '\n'
      << "n_train=" << ds.count(Split::Train) << '\n'
      << "n_validation=" << ds.count(Split::Validation) << '\n'
      << "n_test=" << ds.count(Split::Test) << '\n'
      << "rank_sym=" << resolved.rank_sym << '\n'
      << "rank_nonsym=" << resolved.rank_nonsym << '\n'
      << "epochs_run=" << trace.epochs_run << '\n'
      << "converged=" << (trace.converged ? "true" : "false") << '\n'
      << "final_train_loss=" << last.train_loss << '\n'
      << "final_validation_loglik=" << last.validation_loglik << '\n';
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string data;
  std::string split;
  std::string metric = "both";
  std::string labels;
  std::string categories;
  std::string volumes;
  std::string out;
  std::size_t boot = 1000;
  std::uint64_t seed = 0;
  double epsilon = kDefaultEpsilon;
  std::size_t max_basket_size = 0;
};

inline int cmd_eval(const EvalArgs &a, std::ostream &out) {
  Stopwatch clock;
  const LowRankParams params = read_checkpoint(a.model);
  LoadOptions lo;
  if (a.max_basket_size > 0)
    lo.max_basket_size = a.max_basket_size;
  BasketDataset ds = load(a.data, lo);
  if (ds.catalog_size > params.size())
    throw DataError("data has " + std::to_string(ds.catalog_size) + " items but the model only " +
                    std::to_string(params.size()));
  std::vector<Subset> test;
  if (!a.split.empty()) {
    read_split_manifest(a.split, ds);
    test = ds.baskets_in(Split::Test);
  } else {
    test = ds.baskets;
  }
  if (test.empty())
    throw DataError("no test baskets to evaluate");

  const DenseKernel l = assemble_L(params);
  const DenseKernel k = marginal_kernel(l);
  EvalReport report;
  report.n_test = test.size();

  std::vector<double> mpr_samples;
  if (a.metric == "mpr" || a.metric == "both") {
    const MprResult m = mpr(l, test, a.seed, a.epsilon);
    report.mpr = m.mpr;
    report.skipped = m.skipped;
    mpr_samples = m.per_basket;
    if (!m.per_basket.empty() && a.boot > 0)
      report.mpr_ci = bootstrap_ci(std::span<const double>(m.per_basket), mean_of, a.boot, a.seed);
  }
  if (a.metric == "auc" || a.metric == "both") {
    if (!a.labels.empty()) {
      std::ifstream in(a.labels);
      if (!in)
        throw DataError("cannot open label file '" + a.labels + "'");
      const AucResult r = pair_auc(k, read_labels(in));
      report.auc = r.auc;
      report.auc_kind = "pair";
      if (a.boot > 0)
        report.auc_ci = pair_auc_bootstrap_ci(r, a.boot, a.seed);
    } else {
      const AucResult r = auc(l, test, a.seed, a.epsilon);
      report.auc = r.auc;
      report.auc_kind = "subset";
      if (a.boot > 0)
        report.auc_ci = auc_bootstrap_ci(r, a.boot, a.seed);
    }
  }
  if (!a.categories.empty())
    report.correlation = correlation_summary(k, load_categories(a.categories, ds));

  write_report(report, out);
  if (!a.out.empty()) {
    const std::filesystem::path dir(a.out);
    ensure_dir(dir);
    {
      auto f = open_out(dir / "report.txt");
      write_report(report, f);
    }
    {
      auto f = open_out(dir / "transformed_k.tsv");
      write_grid(transformed_marginal(k), f);
    }
    if (!mpr_samples.empty()) {
      auto f = open_out(dir / "percentile_ranks.tsv");
      f << std::setprecision(17);
      for (double pr : mpr_samples)
        f << pr << '\n';
    }
    RunManifest man;
    man.command = "eval";
    man.seed = a.seed;
    man.config = {{"metric", a.metric}, {"boot", a.boot}, {"epsilon", a.epsilon},
                  {"max_basket_size", a.max_basket_size}, {"uses_split", !a.split.empty()}};
    man.input_hashes["model"] = sha256_file(a.model);
    man.input_hashes["data"] = sha256_file(a.data);
    if (!a.split.empty())
      man.input_hashes["split"] = sha256_file(a.split);
    if (!a.labels.empty())
      man.input_hashes["labels"] = sha256_file(a.labels);
    if (!a.categories.empty())
      man.input_hashes["categories"] = sha256_file(a.categories);
    if (!a.volumes.empty()) {
      std::ifstream in(a.volumes);
      if (!in)
        throw DataError("cannot open volume grid '" + a.volumes + "'");
      auto f = open_out(dir / "pair_error.tsv");
      write_grid(pair_error_grid(k, read_grid(in)), f);
      man.input_hashes["volumes"] = sha256_file(a.volumes);
    }
    man.timings = {{"total", clock.seconds()}};
    man.write(dir / "manifest.json");
  }
  return kOk;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  int regime = 2;
  std::string out;
  std::optional<std::size_t> groups;
  std::optional<Index> items;
  std::optional<std::size_t> baskets;
  std::optional<std::size_t> basket_size;
  std::optional<double> threshold;
  std::string popularity;
  std::uint64_t seed = 0;
};

inline OracleSpec resolve_spec(const GenerateArgs &a) {
  OracleSpec s = OracleSpec::regime(a.regime);
  s.seed = a.seed;
  if (a.groups)
    s.n_disjoint_groups = *a.groups;
  if (a.items)
    s.catalog_size = *a.items;
  if (a.baskets) {
    s.n_baskets = *a.baskets;
    if (a.regime == 1 && !a.threshold)
      s.auc_threshold = 1.0 / static_cast<double>(s.n_baskets);
  }
  if (a.basket_size)
    s.basket_size = *a.basket_size;
  if (a.threshold)
    s.auc_threshold = *a.threshold;
  if (a.popularity == "uniform")
    s.popularity = Popularity::Uniform;
  else if (a.popularity == "zipf")
    s.popularity = Popularity::Zipf;
  s.validate();
  return s;
}

inline int cmd_generate(const GenerateArgs &a, std::ostream &out) {
  Stopwatch clock;
  const OracleSpec spec = resolve_spec(a);
  const SyntheticData syn = generate(spec);
  const std::filesystem::path dir(a.out);
  ensure_dir(dir);
  write(syn.dataset, (dir / "baskets.txt").string());
  {
    auto f = open_out(dir / "labels.tsv");
    write_labels(syn.labels, f);
  }
  {
    auto f = open_out(dir / "volumes.tsv");
    write_grid(syn.labels.ground_truth_volume, f);
  }
  {
    auto f = open_out(dir / "categories.tsv");
    for (Index i = 0; i < spec.catalog_size; ++i)
      f << i << "\tG" << syn.group_of[i] << '\n';
  }
  RunManifest man;
  man.command = "generate";
  man.seed = spec.seed;
  man.config = {{"regime", a.regime},
                {"catalog_size", spec.catalog_size},
                {"n_baskets", spec.n_baskets},
                {"basket_size", spec.basket_size},
                {"n_disjoint_groups", spec.n_disjoint_groups},
                {"popularity", spec.popularity == Popularity::Zipf ? "zipf" : "uniform"},
                {"auc_threshold", spec.auc_threshold},
                {"unique_baskets", spec.unique_baskets},
                {"volume_samples", spec.volume_samples}};
  man.timings = {{"total", clock.seconds()}};
  man.write(dir / "manifest.json");

  out << "catalog_size=" << spec.catalog_size << '\n'
      << "n_baskets=" << syn.dataset.baskets.size() << '\n'
      << "n_groups=" << spec.n_disjoint_groups << '\n'
      << "positive_pairs=" << syn.labels.positives.size() << '\n'
      << "negative_pairs=" << syn.labels.negatives.size() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- diagnose

struct CheckOutcome {
  std::string name;
  bool passed = true;
  std::string detail;
};

/// Relative error of analytic gradients against central differences of the
/// total objective, worst case over `instances` random problems.
inline CheckOutcome check_gradients(std::size_t instances, Index max_m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> msz(2, std::max<Index>(2, max_m));
  std::uniform_int_distribution<Index> rank(1, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const Index m = msz(rng);
    const Index d = std::min(rank(rng), m);
    const Index dp = std::min(rank(rng), m);
    auto rnd = [&](Index r, Index c) {
      Matrix x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
          x(i, j) = u(rng);
      return x;
    };
    const LowRankParams p(rnd(m, d), rnd(m, dp), rnd(m, dp));
    std::vector<Subset> baskets;
    std::uniform_int_distribution<Index> item(0, m - 1);
    for (int b = 0; b < 6; ++b) {
      std::uniform_int_distribution<Index> len(1, d);
      Subset y;
      const Index target = len(rng);
      while (y.size() < target) {
        const Index i = item(rng);
        if (std::find(y.begin(), y.end(), i) == y.end())
          y.push_back(i);
      }
      normalize_subset(y);
      baskets.push_back(y);
    }
    RegularizationConfig reg{0.1, 0.2, 0.3, std::vector<std::size_t>(m, 1)};
    for (const auto &y : baskets)
      for (Index i : y)
        ++reg.lambda[i];
    const Gradients g = gradients(p, baskets, reg);
    const double h = 1e-6;
    auto total_at = [&](Matrix v, Matrix b, Matrix c) {
      return log_likelihood(LowRankParams(std::move(v), std::move(b), std::move(c)), baskets, reg).total;
    };
    double num = 0.0, den = 0.0;
    auto probe = [&](int which, const Matrix &analytic) {
      for (Eigen::Index i = 0; i < analytic.rows(); ++i)
        for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
          Matrix vp = p.V(), bp = p.B(), cp = p.C(), vm = p.V(), bm = p.B(), cm = p.C();
          Matrix &xp = which == 0 ? vp : which == 1 ? bp : cp;
          Matrix &xm = which == 0 ? vm : which == 1 ? bm : cm;
          xp(i, j) += h;
          xm(i, j) -= h;
          const double fd = (total_at(vp, bp, cp) - total_at(vm, bm, cm)) / (2 * h);
          num += (fd - analytic(i, j)) * (fd - analytic(i, j));
          den += fd * fd;
        }
    };
    probe(0, g.dV);
    probe(1, g.dB);
    probe(2, g.dC);
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
  }
  std::ostringstream d;
  d << "instances=" << instances << " max_rel_err=" << std::scientific << std::setprecision(3) << worst;
  return {"gradcheck", worst <= 1e-4, d.str()};
}

/// Exhaustive principal-minor sweep over random assembled kernels.
inline CheckOutcome check_p0(std::size_t instances, Index max_m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> msz(1, std::min<Index>(max_m, kMaxEnumerationSize));
  std::uniform_int_distribution<Index> rank(1, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t failures = 0;
  for (std::size_t t = 0; t < instances; ++t) {
    const Index m = msz(rng);
    auto rnd = [&](Index c) {
      Matrix x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c));
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
          x(i, j) = g(rng);
      return x;
    };
    const Index dp = rank(rng);
    const DenseKernel l = assemble_L(LowRankParams(rnd(rank(rng)), rnd(dp), rnd(dp)));
    const MatrixClassReport r = classify(l.entries(), kMinorTolerance);
    worst = std::min(worst, r.min_principal_minor);
    failures += r.is_P0 ? 0 : 1;
  }
  std::ostringstream d;
  d << "instances=" << instances << " failures=" << failures << " min_minor=" << std::scientific
    << std::setprecision(3) << worst;
  return {"p0", failures == 0, d.str()};
}

/// Fisher form against -d2 and d1 = 0 at the true kernel.
inline CheckOutcome check_fisher(std::size_t instances, Index max_m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> msz(2, std::min<Index>(std::max<Index>(2, max_m), 6));
  std::normal_distribution<double> g(0.0, 1.0);
  const ThetaClass theta(ThetaKind::SymPlusSkew);
  double worst_identity = 0.0, worst_d1 = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const Index m = msz(rng);
    const Matrix l = random_p_matrix(m, theta, rng);
    Matrix h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      for (Eigen::Index j = 0; j < h.cols(); ++j)
        h(i, j) = g(rng);
    const auto p = dpp_distribution(l);
    worst_identity = std::max(worst_identity, std::abs(fisher_form(l, h) + d2_f(l, p, h)));
    worst_d1 = std::max(worst_d1, std::abs(d1_f(l, p, h)));
  }
  std::ostringstream d;
  d << "instances=" << instances << std::scientific << std::setprecision(3)
    << " max_identity_gap=" << worst_identity << " max_abs_d1=" << worst_d1;
  return {"fisher", worst_identity <= 1e-9 && worst_d1 <= 1e-9, d.str()};
}

/// The shipped counterexample probes: H != 0 in the nullspace, L* irreducible.
inline std::vector<CheckOutcome> check_counterexamples() {
  std::vector<CheckOutcome> out;
  for (const auto &probe : counterexample_probes()) {
    const NullspaceResult r = nullspace_check(probe, 1e-12);
    const bool nonzero = probe.h.cwiseAbs().maxCoeff() > 0.0;
    const bool irreducible = is_irreducible(probe.l_star);
    std::ostringstream d;
    d << "probe=" << probe.name << " in_nullspace=" << (r.in_nullspace ? "true" : "false")
      << " max_abs_trace=" << std::scientific << std::setprecision(3) << r.max_abs_trace
      << " h_nonzero=" << (nonzero ? "true" : "false") << " irreducible=" << (irreducible ? "true" : "false");
    out.push_back({"counterexamples", r.in_nullspace && nonzero && irreducible, d.str()});
  }
  return out;
}

struct DiagnoseArgs {
  std::string check = "all";
  Index m = 8;
  std::uint64_t seed = 0;
  std::optional<std::size_t> instances;
};

inline int cmd_diagnose(const DiagnoseArgs &a, std::ostream &out) {
  std::vector<CheckOutcome> results;
  const bool all = a.check == "all";
  if (all || a.check == "p0")
    results.push_back(check_p0(a.instances.value_or(1000), a.m, a.seed));
  if (all || a.check == "fisher")
    results.push_back(check_fisher(a.instances.value_or(20), a.m, a.seed));
  if (all || a.check == "counterexamples")
    for (auto &r : check_counterexamples())
      results.push_back(std::move(r));
  if (all || a.check == "gradcheck")
    results.push_back(check_gradients(a.instances.value_or(50), a.m, a.seed));
  bool ok = true;
  for (const auto &r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ' ' << r.detail << '\n';
    ok = ok && r.passed;
  }
  return ok ? kOk : kDiagnosticFailure;
}

// ---------------------------------------------------------------- entry point

inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Low-rank nonsymmetric determinantal point processes", "nsdpp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(NSDPP_VERSION) + "+" + NSDPP_GIT_REVISION);

  TrainArgs ta;
  auto *train = app.add_subcommand("train", "Fit a kernel to a basket file");
  train->add_option("--data", ta.data, "Basket file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", ta.out, "Output directory")->required();
  std::vector<std::string> preset_names;
  for (const auto &[name, _] : presets())
    preset_names.push_back(name);
  train->add_option("--preset", ta.preset, "Hyperparameter preset; explicit flags override it")
      ->check(CLI::IsMember(preset_names));
  train->add_option("--rank-sym", ta.cfg.rank_sym, "D (0: largest training basket)");
  train->add_option("--rank-nonsym", ta.cfg.rank_nonsym, "D'");
  train->add_option("--alpha", ta.cfg.alpha);
  train->add_option("--beta", ta.cfg.beta);
  train->add_option("--gamma", ta.cfg.gamma);
  train->add_option("--epsilon", ta.cfg.epsilon, "Diagonal stabilizer")->capture_default_str();
  train->add_option("--lr", ta.cfg.learning_rate)->capture_default_str();
  train->add_option("--seed", ta.cfg.seed);
  train->add_option("--max-epochs", ta.cfg.max_epochs)->capture_default_str();
  train->add_option("--min-epochs", ta.cfg.min_epochs);
  train->add_option("--tol", ta.cfg.convergence_rel_tol, "Relative validation change")->capture_default_str();
  train->add_option("--init-scale", ta.cfg.init_scale)->capture_default_str();
  train->add_flag("--symmetric-only", ta.cfg.symmetric_only, "Freeze B = C = 0");
  train->add_flag("--mean", ta.cfg.mean_mode, "Average rather than sum the basket terms");
  train->add_flag("--allow-small-rank", ta.cfg.allow_small_rank);
  train->add_option("--train-frac", ta.train_frac)->capture_default_str();
  train->add_option("--val-frac", ta.val_frac, "Share of training baskets held for validation")
      ->capture_default_str();
  train->add_option("--max-basket-size", ta.max_basket_size, "Drop larger baskets (0: keep all)");

  EvalArgs ea;
  auto *eval = app.add_subcommand("eval", "Score a trained model");
  eval->add_option("--model", ea.model)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", ea.data)->required()->check(CLI::ExistingFile);
  eval->add_option("--split", ea.split, "Split manifest from train; evaluates its test baskets")
      ->check(CLI::ExistingFile);
  eval->add_option("--metric", ea.metric)->check(CLI::IsMember({"mpr", "auc", "both"}))->capture_default_str();
  eval->add_option("--labels", ea.labels, "Pair label sidecar (pair AUC)")->check(CLI::ExistingFile);
  eval->add_option("--categories", ea.categories, "item<TAB>category sidecar")->check(CLI::ExistingFile);
  eval->add_option("--volumes", ea.volumes, "Oracle volume grid for the error export")
      ->check(CLI::ExistingFile);
  eval->add_option("--boot", ea.boot, "Bootstrap resamples (0: none)")->capture_default_str();
  eval->add_option("--seed", ea.seed);
  eval->add_option("--epsilon", ea.epsilon)->capture_default_str();
  eval->add_option("--max-basket-size", ea.max_basket_size);
  eval->add_option("--out", ea.out, "Directory for report, grids and manifest");

  GenerateArgs ga;
  auto *gen = app.add_subcommand("generate", "Write a synthetic oracle dataset");
  gen->add_option("--regime", ga.regime)->check(CLI::IsMember({1, 2, 3}))->capture_default_str();
  gen->add_option("--out", ga.out)->required();
  gen->add_option("--groups", ga.groups);
  gen->add_option("--items", ga.items);
  gen->add_option("--baskets", ga.baskets);
  gen->add_option("--basket-size", ga.basket_size);
  gen->add_option("--threshold", ga.threshold, "Volume cutoff for positive labels");
  gen->add_option("--popularity", ga.popularity)->check(CLI::IsMember({"uniform", "zipf"}));
  gen->add_option("--seed", ga.seed);

  DiagnoseArgs da;
  auto *diag = app.add_subcommand("diagnose", "Run built-in numerical checks");
  diag->add_option("--check", da.check)
      ->check(CLI::IsMember({"all", "p0", "fisher", "counterexamples", "gradcheck"}))
      ->capture_default_str();
  diag->add_option("--m", da.m, "Largest matrix size")->check(CLI::Range(1, 16))->capture_default_str();
  diag->add_option("--seed", da.seed);
  diag->add_option("--instances", da.instances);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train)
      return cmd_train(ta, *train, out);
    if (*eval)
      return cmd_eval(ea, out);
    if (*gen)
      return cmd_generate(ga, out);
    return cmd_diagnose(da, out);
  } catch (const ConfigurationError &e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError &e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const CapabilityError &e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError &e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError &e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

} // namespace nsdpp::cli

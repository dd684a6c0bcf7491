// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "cli.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nsdpp");
  std::vector<char *> argv;
  for (auto &a : args)
    argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = nsdpp::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string value_of(const std::string &report, const std::string &key) {
  std::istringstream in(report);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + "=", 0) == 0)
      return line.substr(key.size() + 1);
  return {};
}

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nsdpp_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"train"}).code, 1);
  EXPECT_EQ(run_cli({"generate", "--out", path("g"), "--regime", "7"}).code, 1);
  EXPECT_EQ(run_cli({"train", "--data", path("missing.txt"), "--out", path("m")}).code, 1);
}

TEST_F(CliTest, GenerateWritesDatasetAndSidecars) {
  const auto r = run_cli({"generate", "--regime", "2", "--out", path("gen"), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char *f : {"baskets.txt", "labels.tsv", "volumes.tsv", "categories.tsv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / "gen" / f)) << f;
  const auto ds = nsdpp::load(path("gen/baskets.txt"));
  EXPECT_EQ(ds.catalog_size, 100u);
  EXPECT_EQ(ds.baskets.size(), 100u);
  const auto man = nlohmann::json::parse(slurp(dir_ / "gen" / "manifest.json"));
  EXPECT_EQ(man["command"], "generate");
  EXPECT_EQ(man["seed"], 3);
}

TEST_F(CliTest, GenerateOverridesAndInfeasibleSpec) {
  auto r = run_cli({"generate", "--out", path("g"), "--items", "12", "--groups", "2", "--baskets", "20",
                    "--basket-size", "3", "--popularity", "zipf"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nsdpp::load(path("g/baskets.txt")).catalog_size, 12u);
  r = run_cli({"generate", "--out", path("h"), "--items", "10", "--groups", "5", "--basket-size", "3"});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, TrainEvalPipelineIsByteDeterministic) {
  ASSERT_EQ(run_cli({"generate", "--regime", "3", "--out", path("gen")}).code, 0);
  const std::vector<std::string> train{"train", "--data", path("gen/baskets.txt"), "--preset", "synthetic",
                                       "--max-epochs", "30", "--min-epochs", "0", "--seed", "2"};
  auto a = train, b = train;
  a.insert(a.end(), {"--out", path("m1")});
  b.insert(b.end(), {"--out", path("m2")});
  const auto ra = run_cli(a), rb = run_cli(b);
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0) << rb.err;
  EXPECT_EQ(ra.out, rb.out);
  for (const char *f : {"model.nsdpp", "trace.tsv", "split.tsv", "items.tsv"})
    EXPECT_EQ(slurp(dir_ / "m1" / f), slurp(dir_ / "m2" / f)) << f;
  const auto ma = nlohmann::json::parse(slurp(dir_ / "m1" / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(dir_ / "m2" / "manifest.json"));
  EXPECT_EQ(ma["config_digest"], mb["config_digest"]);
  EXPECT_EQ(ma["inputs"]["data"], nsdpp::cli::sha256_file(path("gen/baskets.txt")));
  EXPECT_EQ(value_of(ra.out, "rank_sym"), "10");
  EXPECT_EQ(value_of(ra.out, "rank_nonsym"), "20");
  EXPECT_EQ(value_of(ra.out, "epochs_run"), "30");

  auto eval = [&](const std::string &out) {
    return run_cli({"eval", "--model", path("m1/model.nsdpp"), "--data", path("gen/baskets.txt"), "--split",
                    path("m1/split.tsv"), "--labels", path("gen/labels.tsv"), "--categories",
                    path("gen/categories.tsv"), "--volumes", path("gen/volumes.tsv"), "--boot", "100",
                    "--out", path(out)});
  };
  const auto ea = eval("e1"), eb = eval("e2");
  ASSERT_EQ(ea.code, 0) << ea.err;
  EXPECT_EQ(ea.out, eb.out);
  EXPECT_EQ(value_of(ea.out, "auc_kind"), "pair");
  EXPECT_EQ(value_of(ea.out, "n_test"), "20");
  const double auc = std::stod(value_of(ea.out, "auc"));
  EXPECT_GE(auc, 0.0);
  EXPECT_LE(auc, 1.0);
  EXPECT_LE(std::stod(value_of(ea.out, "auc_ci_lo")), auc);
  EXPECT_FALSE(value_of(ea.out, "positive_correlation_fraction[G0,G1]").empty());
  for (const char *f : {"report.txt", "transformed_k.tsv", "percentile_ranks.tsv", "pair_error.tsv"})
    EXPECT_EQ(slurp(dir_ / "e1" / f), slurp(dir_ / "e2" / f)) << f;
}

TEST_F(CliTest, PresetValuesAndExplicitOverrides) {
  ASSERT_EQ(run_cli({"generate", "--regime", "2", "--out", path("gen")}).code, 0);
  const auto r = run_cli({"train", "--data", path("gen/baskets.txt"), "--preset", "synthetic", "--rank-nonsym",
                          "3", "--max-epochs", "2", "--out", path("m")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(value_of(r.out, "rank_sym"), "10");
  EXPECT_EQ(value_of(r.out, "rank_nonsym"), "3");
  EXPECT_EQ(value_of(r.out, "epochs_run"), "2");
  const auto man = nlohmann::json::parse(slurp(dir_ / "m" / "manifest.json"));
  EXPECT_EQ(man["config"]["preset"], "synthetic");
  EXPECT_DOUBLE_EQ(man["config"]["alpha"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(man["config"]["learning_rate"].get<double>(), 0.1);
}

TEST_F(CliTest, SmallRankIsRejectedWithoutFlag) {
  ASSERT_EQ(run_cli({"generate", "--regime", "2", "--out", path("gen")}).code, 0);
  const auto r = run_cli({"train", "--data", path("gen/baskets.txt"), "--rank-sym", "3", "--max-epochs", "1",
                          "--out", path("m")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("rank_sym"), std::string::npos);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  {
    std::ofstream f(path("bad.txt"));
    f << "a,b\na,,c\n";
  }
  auto r = run_cli({"train", "--data", path("bad.txt"), "--out", path("m")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
  {
    std::ofstream f(path("model.nsdpp"));
    f << "garbage";
  }
  r = run_cli({"eval", "--model", path("model.nsdpp"), "--data", path("bad.txt")});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, DiagnoseChecks) {
  auto r = run_cli({"diagnose", "--check", "counterexamples"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS counterexamples"), std::string::npos);
  r = run_cli({"diagnose", "--check", "p0", "--instances", "50", "--m", "6"});
  EXPECT_EQ(r.code, 0) << r.out;
  r = run_cli({"diagnose", "--check", "gradcheck", "--instances", "5", "--m", "5"});
  EXPECT_EQ(r.code, 0) << r.out;
  r = run_cli({"diagnose", "--check", "fisher", "--instances", "3", "--m", "4"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(run_cli({"diagnose", "--m", "40"}).code, 1);
}

TEST(Hashing, KnownDigest) {
  EXPECT_EQ(nsdpp::cli::sha256_string("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

} // namespace

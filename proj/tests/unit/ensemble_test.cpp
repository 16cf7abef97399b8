// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pclft/ensemble.hpp"
#include "pclft/error.hpp"

namespace pclft {
namespace {

namespace fs = std::filesystem;

std::vector<RunReport> five_runs() {
  const std::vector<double> means = {0.61, 0.64, 0.59, 0.63, 0.60};
  const std::vector<std::uint64_t> seeds = {13, 21, 42, 87, 100};
  std::vector<RunReport> out;
  for (std::size_t i = 0; i < means.size(); ++i) {
    out.push_back(RunReport::from_folds(seeds[i], {means[i]}, "ckpt" + std::to_string(i)));
  }
  return out;
}

TEST(RunReport, MeanOfFolds) {
  const RunReport r = RunReport::from_folds(1, {0.5, 0.7, 0.6});
  EXPECT_NEAR(r.mean_val, 0.6, 1e-15);
  EXPECT_THROW(RunReport::from_folds(1, {}), ContractError);
}

TEST(SelectTopK, PicksSecondFourthFirst) {
  const auto top = select_top_k(five_runs(), 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].seed, 21u);
  EXPECT_EQ(top[1].seed, 87u);
  EXPECT_EQ(top[2].seed, 13u);
}

TEST(SelectTopK, IdentityTiesAndErrors) {
  auto runs = five_runs();
  EXPECT_EQ(select_top_k(runs, 5).size(), 5u);
  runs[4].mean_val = 0.64;  // ties seed 21 with seed 100
  auto shuffled = runs;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto a = select_top_k(runs, 3), b = select_top_k(shuffled, 3);
  EXPECT_EQ(a[0].seed, 21u);
  EXPECT_EQ(a[1].seed, 100u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].seed, b[i].seed);
  EXPECT_THROW(select_top_k(runs, 6), ConfigError);
  EXPECT_THROW(select_top_k(runs, 0), ConfigError);
}

TEST(VoteBinary, Examples) {
  EXPECT_EQ(vote_binary({{1}, {1}, {0}}), (std::vector<int>{1}));
  EXPECT_EQ(vote_binary({{0}, {0}, {0}}), (std::vector<int>{0}));
  const std::vector<int> v = {1, 0, 1, 1, 0};
  EXPECT_EQ(vote_binary({v, v, v}), v);
  EXPECT_THROW(vote_binary({v, v}), ConfigError);
  EXPECT_THROW(vote_binary({v, v, {1}}), ContractError);
}

TEST(VoteMultilabel, PerBitMajority) {
  const std::vector<int> a = {1, 0, 1, 0, 0, 0, 0}, b = {1, 1, 0, 0, 0, 0, 0},
                         c = {0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(vote_multilabel({{a}, {b}, {c}}), (std::vector<std::vector<int>>{{1, 0, 0, 0, 0, 0, 0}}));
  EXPECT_EQ(vote_multilabel({{a}, {a}, {a}}), (std::vector<std::vector<int>>{a}));
}

// Random voter triples: permutation invariance, idempotence on unanimity,
// fused bits within the union, and changes only where voters disagree.
TEST(VoteProperties, RandomizedInvariants) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<int>> voters(3, std::vector<int>(40));
    for (auto& v : voters)
      for (int& b : v) b = coin(rng);
    const auto fused = vote_binary(voters);
    auto perm = voters;
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_EQ(vote_binary(perm), fused);
    for (std::size_t i = 0; i < 40; ++i) {
      const bool any = voters[0][i] || voters[1][i] || voters[2][i];
      const bool agree = voters[0][i] == voters[1][i] && voters[1][i] == voters[2][i];
      if (fused[i]) EXPECT_TRUE(any);
      if (agree) EXPECT_EQ(fused[i], voters[0][i]);
    }
  }
}

class PredictionFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "pclft_preds_test";
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path write(const std::string& name, const std::string& body) {
    std::ofstream(dir_ / name) << body;
    return dir_ / name;
  }
  fs::path dir_;
};

TEST_F(PredictionFiles, RoundTripBinaryAndMultilabel) {
  const auto bin = read_predictions(write("b.tsv", "1\t1\n2\t0\n"));
  EXPECT_FALSE(bin.multilabel);
  EXPECT_EQ(bin.binary_labels(), (std::vector<int>{1, 0}));
  std::ostringstream os;
  write_predictions(os, bin);
  EXPECT_EQ(os.str(), "1\t1\n2\t0\n");

  const auto multi = read_predictions(write("m.tsv", "7\t1,0,0,0,0,1,0\n"));
  EXPECT_TRUE(multi.multilabel);
  EXPECT_EQ(multi.labels[0], (std::vector<int>{1, 0, 0, 0, 0, 1, 0}));
}

TEST_F(PredictionFiles, Errors) {
  EXPECT_THROW(read_predictions(write("x.tsv", "1\t2\n")), ParseError);
  EXPECT_THROW(read_predictions(write("y.tsv", "1\t1,0\n")), ParseError);
  EXPECT_THROW(read_predictions(write("z.tsv", "1 1\n")), ParseError);
  EXPECT_THROW(read_predictions(write("w.tsv", "1\t1\n2\t1,0,0,0,0,0,0\n")), ParseError);
  EXPECT_THROW(read_predictions(dir_ / "missing.tsv"), ParseError);
}

TEST_F(PredictionFiles, FusionOverThreeFiles) {
  const auto a = read_predictions(write("a.tsv", "1\t1\n2\t0\n3\t1\n"));
  const auto b = read_predictions(write("b.tsv", "1\t1\n2\t1\n3\t0\n"));
  const auto c = read_predictions(write("c.tsv", "1\t0\n2\t0\n3\t1\n"));
  const PredictionSet sets[] = {a, b, c};
  const PredictionSet fused = fuse_predictions(sets);
  EXPECT_EQ(fused.binary_labels(), (std::vector<int>{1, 0, 1}));
  const PredictionSet same[] = {a, a, a};
  EXPECT_EQ(fuse_predictions(same).labels, a.labels);
  const PredictionSet permuted[] = {c, a, b};
  EXPECT_EQ(fuse_predictions(permuted).labels, fused.labels);

  auto reordered = b;
  std::swap(reordered.ids[0], reordered.ids[1]);
  const PredictionSet mismatched[] = {a, reordered, c};
  EXPECT_THROW(fuse_predictions(mismatched), ContractError);
  const PredictionSet two[] = {a, b};
  EXPECT_THROW(fuse_predictions(two), ConfigError);
}

}  // namespace
}  // namespace pclft

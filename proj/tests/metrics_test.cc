// Copyright 2026 The qroute Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "qroute/error.h"
#include "qroute/evalsuite.h"
#include "reference_oracles.h"
#include "test_support.h"

namespace qroute {
namespace {

using ::qroute::testing::MakeRecord;
using ::qroute::testing::MakeRegistry;
using Matrix = std::vector<std::vector<double>>;

TEST(MaeTest, Examples) {
  EXPECT_EQ(Mae(Matrix{{0.6}}, Matrix{{0.4}}), Mae(Matrix{{0.4}}, Matrix{{0.6}}));
  EXPECT_NEAR(Mae(Matrix{{0.6}}, Matrix{{0.4}}), 0.2, 1e-15);
  const Matrix m = {{0.1, 0.9}, {0.3, 0.3}};
  EXPECT_EQ(Mae(m, m), 0.0);
}

TEST(MaeTest, RejectsBadShapes) {
  EXPECT_THROW(Mae(Matrix{}, Matrix{}), Error);
  EXPECT_THROW(Mae(Matrix{{0.1}}, Matrix{{0.1}, {0.2}}), Error);
  EXPECT_THROW(Mae(Matrix{{0.1, 0.2}}, Matrix{{0.1}}), Error);
}

TEST(RankOrderTest, DescendingWithIndexTies) {
  const std::vector<double> v = {0.2, 0.7, 0.2, 0.9};
  EXPECT_EQ(RankOrder(v), (std::vector<size_t>{3, 1, 0, 2}));
}

TEST(TopKTest, ExactOrderDefinition) {
  // Predicted (A, B, C) against true (A, C, B).
  const Matrix pred = {{0.9, 0.5, 0.1}};
  const Matrix truth = {{0.9, 0.1, 0.5}};
  EXPECT_EQ(TopKAccuracy(pred, truth, 1), 1.0);
  EXPECT_EQ(TopKAccuracy(pred, truth, 2), 0.0);
  EXPECT_EQ(TopKAccuracy(pred, pred, 2), 1.0);
}

TEST(TopKTest, F1SetOverlap) {
  const Matrix pred = {{0.9, 0.8, 0.1}};
  const Matrix truth = {{0.9, 0.1, 0.8}};
  EXPECT_DOUBLE_EQ(TopKF1(pred, truth, 2), 0.5);
  EXPECT_EQ(TopKF1(truth, truth, 2), 1.0);
}

TEST(TopKTest, KOutOfRange) {
  const Matrix m = {{0.1, 0.2, 0.3}};
  EXPECT_THROW(TopKAccuracy(m, m, 0), Error);
  EXPECT_THROW(TopKAccuracy(m, m, 3), Error);
  EXPECT_THROW(TopKF1(m, m, 3), Error);
  EXPECT_THROW(TopKF1Macro(m, m, 0), Error);
}

Matrix RandomMatrix(std::mt19937_64& rng, size_t rows, size_t cols) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix m(rows, std::vector<double>(cols));
  for (auto& row : m) {
    // Coarse values produce ties that exercise the index tie-break.
    for (double& v : row) v = unit(rng) < 0.3 ? std::round(unit(rng) * 4) / 4 : unit(rng);
  }
  return m;
}

TEST(PredictionMetricsTest, MatchBruteForce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t rows = 1 + rng() % 50, cols = 2 + rng() % 4;
    const Matrix est = RandomMatrix(rng, rows, cols), lab = RandomMatrix(rng, rows, cols);
    ASSERT_NEAR(Mae(est, lab), reference::Mae(est, lab), 1e-12);
    for (int k = 1; k < static_cast<int>(cols); ++k) {
      ASSERT_NEAR(TopKAccuracy(est, lab, k), reference::TopKAccuracy(est, lab, k), 1e-12);
      ASSERT_NEAR(TopKF1(est, lab, k), reference::TopKF1(est, lab, k), 1e-12);
      ASSERT_NEAR(TopKF1Macro(est, lab, k), reference::TopKF1Macro(est, lab, k), 1e-12);
    }
  }
}

// Builds the split, the evaluation view and the reference cost inputs from
// the same raw numbers.
struct CostFixture {
  Registry registry;
  DatasetSplit split;
  EvalData data;
  reference::CostCase ref;
};

std::unique_ptr<CostFixture> RandomCostFixture(std::mt19937_64& rng) {
  const size_t m = 2 + rng() % 4, n = 1 + rng() % 50;
  std::vector<int64_t> in(m), out(m);
  for (size_t k = 0; k < m; ++k) {
    in[k] = 1 + static_cast<int64_t>(rng() % 20000000);
    out[k] = 1 + static_cast<int64_t>(rng() % 80000000);
  }
  auto f = std::unique_ptr<CostFixture>(new CostFixture{MakeRegistry(in, out), {}, {}, {}});
  std::vector<std::string> ids;
  for (size_t k = 0; k < m; ++k) ids.push_back("m" + std::to_string(k));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (size_t i = 0; i < n; ++i) {
    PromptRecord r = MakeRecord("r" + std::to_string(i), "t", ids, std::vector<double>(m, 0.0),
                                1 + static_cast<int64_t>(rng() % 500));
    std::vector<double> rewards;
    std::vector<int64_t> outs;
    for (size_t k = 0; k < m; ++k) {
      r.labels[k].label.reward = unit(rng);
      r.labels[k].label.output_tokens = 1 + static_cast<int64_t>(rng() % 900);
      rewards.push_back(r.labels[k].label.reward);
      outs.push_back(r.labels[k].label.output_tokens);
    }
    f->ref.input_tokens.push_back(r.input_tokens);
    f->ref.out_tokens.push_back(outs);
    f->ref.rewards.push_back(rewards);
    f->split.records.push_back(std::move(r));
  }
  for (size_t k = 0; k < m; ++k) {
    f->ref.input_per_1k.push_back(static_cast<double>(in[k]) / 1e9);
    f->ref.output_per_1k.push_back(static_cast<double>(out[k]) / 1e9);
  }
  f->data = EvalData::Build(f->split, f->registry);
  return f;
}

TEST(CostModelTest, SingleModelCostIsPerTokenPriceSum) {
  const Registry& reg = DefaultRegistry();
  const std::vector<std::string> ids = reg.IdsOfFamily("claude");
  DatasetSplit split;
  split.records.push_back(MakeRecord("a", "claude", ids, {0.1, 0.2, 0.3, 0.4}, 10, 30));
  split.records.push_back(MakeRecord("b", "claude", ids, {0.1, 0.2, 0.3, 0.4}, 700, 5));
  const EvalData data = EvalData::Build(split, reg);
  for (size_t k = 0; k < ids.size(); ++k) {
    const ModelCandidate& c = reg.Get(ids[k]);
    EXPECT_NEAR(NormalizedCost(data, Selection{k, k}),
                c.input_price.per_token() + c.output_price.per_token(), 1e-18);
  }
}

TEST(CostModelTest, HaikuAndSonnetSplit) {
  const Registry& reg = DefaultRegistry();
  const std::vector<std::string> ids = reg.IdsOfFamily("claude");
  DatasetSplit split;
  split.records.push_back(MakeRecord("a", "claude", ids, {0.1, 0.2, 0.3, 0.4}));
  split.records.push_back(MakeRecord("b", "claude", ids, {0.1, 0.2, 0.3, 0.4}));
  const EvalData data = EvalData::Build(split, reg);
  const size_t haiku = reg.IndexOf("claude-3-haiku") - reg.IndexOf(ids[0]);
  const size_t sonnet = reg.IndexOf("claude-3.5-sonnet-v2") - reg.IndexOf(ids[0]);
  // Input (0.00025 + 0.003) / 2 and output (0.00125 + 0.015) / 2 per 1K.
  const double expected = (0.00025 + 0.003) / 2 / 1000 + (0.00125 + 0.015) / 2 / 1000;
  EXPECT_NEAR(NormalizedCost(data, Selection{haiku, sonnet}), expected, 1e-18);
}

TEST(CostModelTest, Errors) {
  const Registry reg = MakeRegistry({1, 2}, {1, 2});
  DatasetSplit split;
  split.records.push_back(MakeRecord("a", "t", {"m0", "m1"}, {0.1, 0.2}, 0, 0));
  const EvalData data = EvalData::Build(split, reg);
  EXPECT_THROW(NormalizedCost(data, Selection{}), Error);
  EXPECT_THROW(NormalizedCost(data, Selection{0, 1}), Error);
  EXPECT_THROW(NormalizedCost(data, Selection{5}), Error);
  try {
    NormalizedCost(data, Selection{0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate token totals"), std::string::npos);
  }
  EXPECT_THROW(EvalData::Build(DatasetSplit{}, reg), Error);
}

TEST(CostModelTest, MatchesBruteForce) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = RandomCostFixture(rng);
    Selection s(f->data.num_records());
    for (size_t& v : s) v = rng() % f->data.num_candidates();
    const double want = reference::NormalizedCost(f->ref, s);
    ASSERT_NEAR(NormalizedCost(f->data, s), want, 1e-9 * want);
    ASSERT_NEAR(MeanQuality(f->data, s), reference::MeanQuality(f->ref, s), 1e-12);
    const std::vector<double> shares = RouteShares(f->data, s);
    double total = 0.0;
    for (size_t k = 0; k < shares.size(); ++k) {
      const auto count = std::count(s.begin(), s.end(), k);
      ASSERT_NEAR(shares[k], static_cast<double>(count) / s.size(), 1e-15);
      total += shares[k];
    }
    ASSERT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(RoutingAccuracyTest, CheapestMemberOfArgmaxSet) {
  const Registry reg = MakeRegistry({3, 1, 2}, {3, 1, 2});
  DatasetSplit split;
  split.records.push_back(MakeRecord("a", "t", {"m0", "m1", "m2"}, {0.9, 0.2, 0.9}));
  split.records.push_back(MakeRecord("b", "t", {"m0", "m1", "m2"}, {0.1, 0.8, 0.3}));
  const EvalData data = EvalData::Build(split, reg);
  EXPECT_EQ(RoutingAccuracy(data, Selection{2, 1}), 1.0);
  EXPECT_EQ(RoutingAccuracy(data, Selection{0, 1}), 0.5);
  EXPECT_EQ(RoutingAccuracy(data, Selection{1, 0}), 0.0);
}

TEST(AnchorsTest, CheapestAndStrongest) {
  const Registry reg = MakeRegistry({3, 1, 2}, {3, 1, 2});
  DatasetSplit split;
  split.records.push_back(MakeRecord("a", "t", {"m0", "m1", "m2"}, {0.9, 0.2, 0.5}));
  split.records.push_back(MakeRecord("b", "t", {"m0", "m1", "m2"}, {0.7, 0.4, 0.5}));
  const EvalData data = EvalData::Build(split, reg);
  const Anchors a = ComputeAnchors(data);
  EXPECT_EQ(a.cheapest, 1u);
  EXPECT_EQ(a.strongest, 0u);
  EXPECT_DOUBLE_EQ(a.quality_min, 0.3);
  EXPECT_DOUBLE_EQ(a.quality_max, 0.8);
  EXPECT_LT(a.cost_min, a.cost_max);
}

}  // namespace
}  // namespace qroute

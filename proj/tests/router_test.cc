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

#include "qroute/router.h"

#include <algorithm>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "qroute/error.h"
#include "qroute/estimator.h"
#include "reference_oracles.h"
#include "test_support.h"

namespace qroute {
namespace {

using ::qroute::testing::MakeRegistry;

QualityEstimates Estimates(std::vector<std::string> ids, std::vector<double> values) {
  QualityEstimates e;
  e.prompt_id = "p";
  e.candidate_ids = std::move(ids);
  e.values = std::move(values);
  e.estimator_version = "test";
  return e;
}

// m0:A cost 10, m1:B cost 2, m2:C cost 1.
Registry AbcRegistry() { return MakeRegistry({5, 1, 1}, {5, 1, 0}); }

RouterConfig StaticConfig(double hi, double lo) {
  RouterConfig c;
  c.strategy = ThresholdStrategy::kStatic;
  c.static_max = hi;
  c.static_min = lo;
  return c;
}

TEST(GateThresholdTest, DynamicMaxHalfTolerance) {
  const std::vector<double> r = {0.8, 0.3};
  EXPECT_DOUBLE_EQ(GateThreshold(r, 0.5, {}), 0.4);
}

TEST(GateThresholdTest, ZeroToleranceIsMax) {
  const std::vector<double> r = {0.31, 0.77, 0.5};
  EXPECT_EQ(GateThreshold(r, 0.0, {}), 0.77);
}

TEST(GateThresholdTest, MinMaxFullToleranceIsMin) {
  RouterConfig c;
  c.strategy = ThresholdStrategy::kDynamicMinMax;
  const std::vector<double> r = {0.9, 0.5};
  EXPECT_DOUBLE_EQ(GateThreshold(r, 1.0, c), 0.5);
}

TEST(GateThresholdTest, StaticDynamicUsesStaticMin) {
  RouterConfig c;
  c.strategy = ThresholdStrategy::kStaticDynamic;
  c.static_min = 0.2;
  const std::vector<double> r = {0.6, 0.1};
  EXPECT_DOUBLE_EQ(GateThreshold(r, 0.5, c), 0.4);
}

TEST(GateThresholdTest, MarginFloorsAtZero) {
  RouterConfig c;
  c.safety_margin = 0.3;
  const std::vector<double> r = {0.5, 0.1};
  EXPECT_DOUBLE_EQ(GateThreshold(r, 0.5, c), 0.0);
  EXPECT_DOUBLE_EQ(GateThreshold(r, 0.0, c), 0.2);
}

TEST(GateThresholdTest, RejectsBadInputs) {
  const std::vector<double> r = {0.5};
  EXPECT_THROW(GateThreshold(r, 1.5, {}), Error);
  EXPECT_THROW(GateThreshold(r, -0.1, {}), Error);
  EXPECT_THROW(GateThreshold({}, 0.5, {}), Error);
  RouterConfig c;
  c.strategy = ThresholdStrategy::kStatic;
  c.static_min = 0.1;
  EXPECT_THROW(GateThreshold(r, 0.5, c), Error);
}

TEST(RouterConfigTest, Validation) {
  EXPECT_NO_THROW(ValidateRouterConfig({}));
  EXPECT_NO_THROW(ValidateRouterConfig(StaticConfig(0.8, 0.2)));
  EXPECT_THROW(ValidateRouterConfig(StaticConfig(0.2, 0.8)), Error);
  EXPECT_THROW(ValidateRouterConfig(StaticConfig(1.2, 0.2)), Error);
  EXPECT_THROW(ValidateRouterConfig(StaticConfig(0.8, -0.1)), Error);
  RouterConfig c;
  c.safety_margin = -1;
  EXPECT_THROW(ValidateRouterConfig(c), Error);
  c.safety_margin = 0;
  c.strategy = ThresholdStrategy::kStaticDynamic;
  EXPECT_THROW(ValidateRouterConfig(c), Error);
}

TEST(StrategyTest, NamesRoundTrip) {
  for (auto s : {ThresholdStrategy::kDynamicMax, ThresholdStrategy::kDynamicMinMax,
                 ThresholdStrategy::kStaticDynamic, ThresholdStrategy::kStatic}) {
    EXPECT_EQ(ParseStrategy(StrategyName(s)), s);
  }
  EXPECT_THROW(ParseStrategy("greedy"), Error);
}

TEST(RouteTest, HalfToleranceSelectsCheapestFeasible) {
  const Registry reg = AbcRegistry();
  const RoutingDecision d = Route(Estimates({"m0", "m1", "m2"}, {0.9, 0.7, 0.4}), 0.5, {}, reg);
  EXPECT_DOUBLE_EQ(d.threshold, 0.45);
  EXPECT_EQ(d.feasible, (std::vector<std::string>{"m0", "m1"}));
  EXPECT_EQ(d.selected, "m1");
  EXPECT_FALSE(d.fallback_used);
  EXPECT_EQ(d.registry_version, 1);
}

TEST(RouteTest, ZeroToleranceSelectsPredictedBest) {
  const Registry reg = AbcRegistry();
  const RoutingDecision d = Route(Estimates({"m0", "m1", "m2"}, {0.9, 0.7, 0.4}), 0.0, {}, reg);
  EXPECT_EQ(d.feasible, std::vector<std::string>{"m0"});
  EXPECT_EQ(d.selected, "m0");
}

TEST(RouteTest, FullToleranceSelectsCheapest) {
  const Registry reg = AbcRegistry();
  const RoutingDecision d = Route(Estimates({"m0", "m1", "m2"}, {0.9, 0.7, 0.4}), 1.0, {}, reg);
  EXPECT_EQ(d.threshold, 0.0);
  EXPECT_EQ(d.feasible.size(), 3u);
  EXPECT_EQ(d.selected, "m2");
}

TEST(RouteTest, FeasibleListedInRegistryOrder) {
  const Registry reg = AbcRegistry();
  const RoutingDecision d = Route(Estimates({"m2", "m0", "m1"}, {0.4, 0.9, 0.7}), 1.0, {}, reg);
  EXPECT_EQ(d.feasible, (std::vector<std::string>{"m0", "m1", "m2"}));
  EXPECT_EQ(d.estimates.candidate_ids[0], "m2");
}

TEST(RouteTest, CostTieBrokenByEstimateThenRegistryOrder) {
  const Registry reg = MakeRegistry({1, 1, 1}, {1, 1, 1});
  EXPECT_EQ(Route(Estimates({"m0", "m1", "m2"}, {0.5, 0.6, 0.6}), 1.0, {}, reg).selected, "m1");
  EXPECT_EQ(Route(Estimates({"m2", "m1", "m0"}, {0.6, 0.6, 0.5}), 1.0, {}, reg).selected, "m1");
}

TEST(RouteTest, StaticEmptyFeasibleFallsBack) {
  const Registry reg = AbcRegistry();
  const RoutingDecision d =
      Route(Estimates({"m0", "m1", "m2"}, {0.3, 0.5, 0.5}), 0.0, StaticConfig(0.9, 0.1), reg);
  EXPECT_TRUE(d.fallback_used);
  EXPECT_EQ(d.selected, "m2");
  EXPECT_EQ(d.feasible, std::vector<std::string>{"m2"});
}

TEST(RouteTest, RejectsUnknownAndDuplicateCandidates) {
  const Registry reg = AbcRegistry();
  EXPECT_THROW(Route(Estimates({"m0", "zz"}, {0.1, 0.2}), 0.5, {}, reg), Error);
  EXPECT_THROW(Route(Estimates({"m0", "m0"}, {0.1, 0.2}), 0.5, {}, reg), Error);
  EXPECT_THROW(Route(Estimates({"m0"}, {0.1, 0.2}), 0.5, {}, reg), Error);
  EXPECT_THROW(Route(Estimates({}, {}), 0.5, {}, reg), Error);
}

TEST(RouteTest, CostWeightsChangeRanking) {
  // m0 cheap input, expensive output; m1 the reverse.
  const Registry reg = MakeRegistry({1, 10}, {10, 1});
  RouterConfig c;
  c.cost_weights = {1, 100};
  EXPECT_EQ(Route(Estimates({"m0", "m1"}, {0.5, 0.5}), 1.0, c, reg).selected, "m1");
  c.cost_weights = {100, 1};
  EXPECT_EQ(Route(Estimates({"m0", "m1"}, {0.5, 0.5}), 1.0, c, reg).selected, "m0");
}

TEST(RouteTest, PureFunction) {
  const Registry reg = AbcRegistry();
  const QualityEstimates e = Estimates({"m0", "m1", "m2"}, {0.61, 0.6, 0.2});
  const RoutingDecision a = Route(e, 0.3, {}, reg);
  const RoutingDecision b = Route(e, 0.3, {}, reg);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.threshold, b.threshold);
  EXPECT_EQ(a.feasible, b.feasible);
}

struct RandomInstance {
  reference::RouterCase c;
  RouterConfig config;
};

RandomInstance MakeInstance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_int_distribution<int> cost(1, 6);  // small range forces ties
  std::uniform_int_distribution<int> coarse(0, 10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RandomInstance inst;
  const int n = size(rng);
  for (int i = 0; i < n; ++i) {
    inst.c.r.push_back(unit(rng) < 0.3 ? coarse(rng) / 10.0 : unit(rng));
    inst.c.cost.push_back(cost(rng));
    inst.c.order.push_back(static_cast<size_t>(i));
  }
  std::shuffle(inst.c.order.begin(), inst.c.order.end(), rng);
  inst.c.strategy = static_cast<int>(rng() % 4);
  double a = unit(rng), b = unit(rng);
  inst.c.static_max = std::max(a, b);
  inst.c.static_min = std::min(a, b);
  inst.c.delta = unit(rng) < 0.5 ? 0.0 : unit(rng) * 0.3;
  inst.config.strategy = static_cast<ThresholdStrategy>(inst.c.strategy);
  if (inst.c.strategy >= 2) inst.config.static_min = inst.c.static_min;
  if (inst.c.strategy == 3) inst.config.static_max = inst.c.static_max;
  inst.config.safety_margin = inst.c.delta;
  return inst;
}

TEST(RouteIndicesTest, MatchesBruteForceReference) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 2000; ++trial) {
    const RandomInstance inst = MakeInstance(rng);
    for (double tau : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
      const IndexDecision got =
          RouteIndices(inst.c.r, inst.c.cost, inst.c.order, tau, inst.config);
      const reference::RouterAnswer want = reference::Route(inst.c, tau);
      ASSERT_EQ(got.selected, want.selected) << "trial " << trial << " tau " << tau;
      ASSERT_EQ(got.fallback_used, want.fallback);
      ASSERT_NEAR(got.threshold, want.threshold, 1e-15);
    }
  }
}

TEST(RouteIndicesTest, FeasibleSetsMonotoneUnderDynamicMax) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    RandomInstance inst = MakeInstance(rng);
    inst.c.strategy = 0;
    std::vector<bool> prev(inst.c.r.size(), false);
    int64_t prev_cost = INT64_MAX;
    for (int step = 0; step <= 20; ++step) {
      const double tau = step / 20.0;
      const reference::RouterAnswer a = reference::Route(inst.c, tau);
      for (size_t i = 0; i < prev.size(); ++i) ASSERT_TRUE(!prev[i] || a.feasible[i]);
      RouterConfig config;
      config.safety_margin = inst.c.delta;
      const IndexDecision got = RouteIndices(inst.c.r, inst.c.cost, inst.c.order, tau, config);
      ASSERT_LE(inst.c.cost[got.selected], prev_cost);
      prev = a.feasible;
      prev_cost = inst.c.cost[got.selected];
    }
  }
}

TEST(RouteIndicesTest, NoFallbackUnderDynamicMaxWithoutMargin) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const RandomInstance inst = MakeInstance(rng);
    const IndexDecision got = RouteIndices(inst.c.r, inst.c.cost, inst.c.order,
                                           (rng() % 101) / 100.0, RouterConfig{});
    ASSERT_FALSE(got.fallback_used);
  }
}

TEST(RouteIndicesTest, ScaleCovariance) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const RandomInstance inst = MakeInstance(rng);
    for (double s : {0.5, 0.25}) {
      std::vector<double> scaled = inst.c.r;
      for (double& v : scaled) v *= s;
      for (double tau : {0.0, 0.3, 0.5, 1.0}) {
        const IndexDecision a = RouteIndices(inst.c.r, inst.c.cost, inst.c.order, tau, {});
        const IndexDecision b = RouteIndices(scaled, inst.c.cost, inst.c.order, tau, {});
        ASSERT_EQ(a.selected, b.selected);
        ASSERT_EQ(b.threshold, a.threshold * s);
      }
    }
  }
}

TEST(RouteIndicesTest, ExtremeTolerances) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const RandomInstance inst = MakeInstance(rng);
    const std::vector<double>& r = inst.c.r;
    const double best = *std::max_element(r.begin(), r.end());
    const int64_t cheapest = *std::min_element(inst.c.cost.begin(), inst.c.cost.end());
    const IndexDecision zero = RouteIndices(r, inst.c.cost, inst.c.order, 0.0, {});
    ASSERT_EQ(r[zero.selected], best);
    const IndexDecision one = RouteIndices(r, inst.c.cost, inst.c.order, 1.0, {});
    ASSERT_EQ(inst.c.cost[one.selected], cheapest);
  }
}

TEST(StaticStatisticsTest, MeansOfRowExtremes) {
  const std::vector<std::vector<double>> rows = {{0.2, 0.8}, {0.4, 0.6, 0.1}};
  const StaticStatistics s = ComputeStaticStatistics(rows);
  EXPECT_DOUBLE_EQ(s.mean_max, 0.7);
  EXPECT_DOUBLE_EQ(s.mean_min, 0.15);
  EXPECT_THROW(ComputeStaticStatistics({}), Error);
}

class RouteBatchTest : public ::testing::Test {
 protected:
  void SetUp() override {
    EncoderSpec spec;
    spec.dim = 32;
    encoder_ = std::make_unique<HashedNgramEncoder>(spec);
    const std::vector<std::string> ids = DefaultRegistry().IdsOfFamily("claude");
    auto params = std::make_shared<EstimatorParameters>(
        InitParameters("claude", spec, ids, 16, 8, 3));
    estimator_ = std::make_unique<QualityEstimator>(params);
    for (int i = 0; i < 20; ++i) {
      prompts_.push_back({"p" + std::to_string(i), "question number " + std::to_string(i * 7)});
    }
  }

  std::unique_ptr<HashedNgramEncoder> encoder_;
  std::unique_ptr<QualityEstimator> estimator_;
  std::vector<PromptInput> prompts_;
};

TEST_F(RouteBatchTest, MatchesSingleRouting) {
  const Registry& reg = DefaultRegistry();
  const std::vector<RoutingDecision> batch =
      RouteBatch(prompts_, *estimator_, *encoder_, 0.4, {}, reg);
  ASSERT_EQ(batch.size(), prompts_.size());
  for (size_t i = 0; i < prompts_.size(); ++i) {
    const PromptEmbedding e = encoder_->Encode(prompts_[i].id, prompts_[i].text);
    const RoutingDecision one =
        Route(estimator_->PredictAll(e, estimator_->candidate_ids()), 0.4, {}, reg);
    EXPECT_EQ(batch[i].selected, one.selected);
    EXPECT_EQ(batch[i].estimates.values, one.estimates.values);
    EXPECT_EQ(batch[i].estimates.prompt_id, prompts_[i].id);
  }
}

TEST_F(RouteBatchTest, IdenticalPromptsIdenticalDecisions) {
  std::vector<PromptInput> same(5, PromptInput{"x", "the same text"});
  const std::vector<RoutingDecision> batch =
      RouteBatch(same, *estimator_, *encoder_, 0.2, {}, DefaultRegistry());
  for (const RoutingDecision& d : batch) {
    EXPECT_EQ(d.selected, batch[0].selected);
    EXPECT_EQ(d.estimates.values, batch[0].estimates.values);
  }
}

TEST_F(RouteBatchTest, TotalCostNonIncreasingInTolerance) {
  const Registry& reg = DefaultRegistry();
  int64_t prev = INT64_MAX;
  for (double tau : {0.0, 0.5, 1.0}) {
    int64_t total = 0;
    for (const RoutingDecision& d : RouteBatch(prompts_, *estimator_, *encoder_, tau, {}, reg)) {
      const ModelCandidate& c = reg.Get(d.selected);
      total += c.input_price.nanos() + c.output_price.nanos();
    }
    EXPECT_LE(total, prev);
    prev = total;
  }
}

TEST_F(RouteBatchTest, CandidateSubsetAndErrorsNamePrompt) {
  const std::vector<std::string> subset = {"claude-3-haiku"};
  const Registry& reg = DefaultRegistry();
  for (const RoutingDecision& d : RouteBatch(prompts_, *estimator_, *encoder_, 0.0, {}, reg,
                                             subset)) {
    EXPECT_EQ(d.selected, subset[0]);
  }
  const std::vector<std::string> bad = {"nope"};
  try {
    RouteBatch(prompts_, *estimator_, *encoder_, 0.0, {}, reg, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'p0'"), std::string::npos);
  }
}

}  // namespace
}  // namespace qroute

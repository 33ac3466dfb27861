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


// Tolerance-gated, cost-minimal candidate selection.
//
// Given estimates r_hat and a tolerance tau in [0, 1], the gate computes
//
//   r_th = max(0, r_max - tau * (r_max - r_min) - delta)
//
// where (r_max, r_min) come from the configured strategy. Candidates with
// r_hat >= r_th are feasible; the cheapest feasible candidate wins, with ties
// broken by higher r_hat and then registry order. When nothing is feasible
// (possible only with static statistics) the router falls back to the
// predicted-best candidate.

#ifndef QROUTE_ROUTER_H_
#define QROUTE_ROUTER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qroute/encoder.h"
#include "qroute/estimator.h"
#include "qroute/registry.h"

namespace qroute {

enum class ThresholdStrategy {
  kDynamicMax,     // (max r_hat, 0)
  kDynamicMinMax,  // (max r_hat, min r_hat)
  kStaticDynamic,  // (max r_hat, static_min)
  kStatic,         // (static_max, static_min)
};

std::string_view StrategyName(ThresholdStrategy strategy);
ThresholdStrategy ParseStrategy(std::string_view name);

struct RouterConfig {
  ThresholdStrategy strategy = ThresholdStrategy::kDynamicMax;
  std::optional<double> static_max;
  std::optional<double> static_min;
  double safety_margin = 0.0;  // delta
  CostWeights cost_weights;
};

// Throws kInvalidArgument on a bad delta, missing statistics or statistics
// outside 0 <= min <= max <= 1.
void ValidateRouterConfig(const RouterConfig& config);

struct RoutingDecision {
  std::string selected;
  double threshold = 0.0;
  std::vector<std::string> feasible;  // registry order
  bool fallback_used = false;
  QualityEstimates estimates;
  double tolerance = 0.0;
  ThresholdStrategy strategy = ThresholdStrategy::kDynamicMax;
  int64_t registry_version = 0;
};

double GateThreshold(std::span<const double> estimates, double tolerance,
                     const RouterConfig& config);

// Index-level decision over parallel arrays. `order` gives each candidate's
// registry position for the final tie-break.
struct IndexDecision {
  size_t selected = 0;
  double threshold = 0.0;
  bool fallback_used = false;
};

IndexDecision RouteIndices(std::span<const double> estimates,
                           std::span<const int64_t> cost_keys,
                           std::span<const size_t> order, double tolerance,
                           const RouterConfig& config);

RoutingDecision Route(const QualityEstimates& estimates, double tolerance,
                      const RouterConfig& config, const Registry& registry);

// encode -> predict_all -> route per prompt. An empty candidate list means
// every candidate the estimator scores.
std::vector<RoutingDecision> RouteBatch(std::span<const PromptInput> prompts,
                                        const QualityEstimator& estimator,
                                        const Encoder& encoder, double tolerance,
                                        const RouterConfig& config,
                                        const Registry& registry,
                                        std::span<const std::string> candidates = {});

struct StaticStatistics {
  double mean_max = 0.0;
  double mean_min = 0.0;
};

// Dataset-level mean of per-prompt max and min estimates.
StaticStatistics ComputeStaticStatistics(std::span<const std::vector<double>> estimates);

}  // namespace qroute

#endif  // QROUTE_ROUTER_H_

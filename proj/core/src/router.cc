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
#include <cmath>

#include "qroute/error.h"
#include "qroute/util.h"

namespace qroute {

std::string_view StrategyName(ThresholdStrategy strategy) {
  switch (strategy) {
    case ThresholdStrategy::kDynamicMax:
      return "dynamic_max";
    case ThresholdStrategy::kDynamicMinMax:
      return "dynamic_minmax";
    case ThresholdStrategy::kStaticDynamic:
      return "static_dynamic";
    case ThresholdStrategy::kStatic:
      return "static";
  }
  return "unknown";
}

ThresholdStrategy ParseStrategy(std::string_view name) {
  if (name == "dynamic_max") return ThresholdStrategy::kDynamicMax;
  if (name == "dynamic_minmax") return ThresholdStrategy::kDynamicMinMax;
  if (name == "static_dynamic") return ThresholdStrategy::kStaticDynamic;
  if (name == "static") return ThresholdStrategy::kStatic;
  ThrowInvalidArgument("unknown strategy '" + std::string(name) + "'");
}

void ValidateRouterConfig(const RouterConfig& config) {
  if (!(config.safety_margin >= 0.0) || !std::isfinite(config.safety_margin)) {
    ThrowInvalidArgument("safety margin must be a finite value >= 0");
  }
  const bool needs_min = config.strategy == ThresholdStrategy::kStaticDynamic ||
                         config.strategy == ThresholdStrategy::kStatic;
  const bool needs_max = config.strategy == ThresholdStrategy::kStatic;
  if (needs_min && !config.static_min) {
    ThrowInvalidArgument(std::string(StrategyName(config.strategy)) +
                         " strategy requires static_min");
  }
  if (needs_max && !config.static_max) {
    ThrowInvalidArgument("static strategy requires static_max");
  }
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (config.static_min && !in_unit(*config.static_min)) {
    ThrowInvalidArgument("static_min must be in [0, 1]");
  }
  if (config.static_max && !in_unit(*config.static_max)) {
    ThrowInvalidArgument("static_max must be in [0, 1]");
  }
  if (config.static_min && config.static_max && *config.static_min > *config.static_max) {
    ThrowInvalidArgument("static_min must not exceed static_max");
  }
}

double GateThreshold(std::span<const double> estimates, double tolerance,
                     const RouterConfig& config) {
  if (!(tolerance >= 0.0 && tolerance <= 1.0)) {
    ThrowInvalidArgument("tolerance must be in [0, 1]");
  }
  if (estimates.empty()) ThrowInvalidArgument("empty candidate set");
  ValidateRouterConfig(config);
  double r_max = estimates[0];
  double r_min = estimates[0];
  for (double v : estimates) {
    r_max = std::max(r_max, v);
    r_min = std::min(r_min, v);
  }
  double hi = r_max;
  double lo = 0.0;
  switch (config.strategy) {
    case ThresholdStrategy::kDynamicMax:
      break;
    case ThresholdStrategy::kDynamicMinMax:
      lo = r_min;
      break;
    case ThresholdStrategy::kStaticDynamic:
      lo = *config.static_min;
      break;
    case ThresholdStrategy::kStatic:
      hi = *config.static_max;
      lo = *config.static_min;
      break;
  }
  return std::max(0.0, hi - tolerance * (hi - lo) - config.safety_margin);
}

IndexDecision RouteIndices(std::span<const double> estimates,
                           std::span<const int64_t> cost_keys,
                           std::span<const size_t> order, double tolerance,
                           const RouterConfig& config) {
  if (cost_keys.size() != estimates.size() || order.size() != estimates.size()) {
    ThrowInvalidArgument("route: estimates, costs and order differ in length");
  }
  IndexDecision out;
  out.threshold = GateThreshold(estimates, tolerance, config);
  const size_t n = estimates.size();
  // Strict preference: lower cost, then higher estimate, then registry order.
  auto better = [&](size_t a, size_t b) {
    if (cost_keys[a] != cost_keys[b]) return cost_keys[a] < cost_keys[b];
    if (estimates[a] != estimates[b]) return estimates[a] > estimates[b];
    return order[a] < order[b];
  };
  bool found = false;
  for (size_t i = 0; i < n; ++i) {
    if (estimates[i] >= out.threshold && (!found || better(i, out.selected))) {
      out.selected = i;
      found = true;
    }
  }
  if (found) return out;

  out.fallback_used = true;
  out.selected = 0;
  for (size_t i = 1; i < n; ++i) {
    const size_t s = out.selected;
    if (estimates[i] > estimates[s] ||
        (estimates[i] == estimates[s] && better(i, s))) {
      out.selected = i;
    }
  }
  return out;
}

RoutingDecision Route(const QualityEstimates& estimates, double tolerance,
                      const RouterConfig& config, const Registry& registry) {
  const size_t n = estimates.candidate_ids.size();
  if (estimates.values.size() != n) {
    ThrowInvalidArgument("estimates: ids and values differ in length");
  }
  if (n == 0) ThrowInvalidArgument("empty candidate set");
  std::vector<int64_t> costs(n);
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) {
    const std::string& id = estimates.candidate_ids[i];
    order[i] = registry.IndexOf(id);
    costs[i] = registry.CostKey(id, config.cost_weights);
    for (size_t j = 0; j < i; ++j) {
      if (order[j] == order[i]) ThrowInvalidArgument("duplicate candidate '" + id + "'");
    }
  }
  const IndexDecision core =
      RouteIndices(estimates.values, costs, order, tolerance, config);

  RoutingDecision decision;
  decision.selected = estimates.candidate_ids[core.selected];
  decision.threshold = core.threshold;
  decision.fallback_used = core.fallback_used;
  std::vector<size_t> feasible;
  if (core.fallback_used) {
    feasible.push_back(core.selected);
  } else {
    for (size_t i = 0; i < n; ++i) {
      if (estimates.values[i] >= core.threshold) feasible.push_back(i);
    }
  }
  std::sort(feasible.begin(), feasible.end(),
            [&](size_t a, size_t b) { return order[a] < order[b]; });
  for (size_t i : feasible) decision.feasible.push_back(estimates.candidate_ids[i]);
  decision.estimates = estimates;
  decision.tolerance = tolerance;
  decision.strategy = config.strategy;
  decision.registry_version = registry.version();
  return decision;
}

std::vector<RoutingDecision> RouteBatch(std::span<const PromptInput> prompts,
                                        const QualityEstimator& estimator,
                                        const Encoder& encoder, double tolerance,
                                        const RouterConfig& config,
                                        const Registry& registry,
                                        std::span<const std::string> candidates) {
  const std::span<const std::string> ids =
      candidates.empty() ? std::span<const std::string>(estimator.candidate_ids())
                         : candidates;
  std::vector<RoutingDecision> out;
  out.reserve(prompts.size());
  for (const PromptInput& prompt : prompts) {
    try {
      const PromptEmbedding embedding = encoder.Encode(prompt.id, prompt.text);
      out.push_back(Route(estimator.PredictAll(embedding, ids), tolerance, config, registry));
    } catch (const Error& e) {
      throw Error(e.code(), "prompt '" + prompt.id + "': " + e.what());
    }
  }
  return out;
}

StaticStatistics ComputeStaticStatistics(std::span<const std::vector<double>> estimates) {
  if (estimates.empty()) ThrowInvalidArgument("static statistics need calibration data");
  std::vector<double> maxes;
  std::vector<double> mins;
  for (const std::vector<double>& row : estimates) {
    if (row.empty()) ThrowInvalidArgument("calibration row has no estimates");
    maxes.push_back(*std::max_element(row.begin(), row.end()));
    mins.push_back(*std::min_element(row.begin(), row.end()));
  }
  return {PairwiseMean(maxes), PairwiseMean(mins)};
}

}  // namespace qroute

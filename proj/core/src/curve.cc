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

#include "qroute/error.h"
#include "qroute/evalsuite.h"

namespace qroute {

std::vector<double> DefaultToleranceGrid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

QualityCostCurve BuildCurve(std::span<const CurvePoint> sweep, const Anchors& anchors) {
  if (!(anchors.quality_max > anchors.quality_min)) {
    ThrowInvalidArgument("degenerate quality range");
  }
  if (!(anchors.cost_max > anchors.cost_min)) ThrowInvalidArgument("degenerate cost range");
  std::vector<CurvePoint> all(sweep.begin(), sweep.end());
  all.push_back({std::nullopt, anchors.cost_min, anchors.quality_min, 0.0, 0.0});
  all.push_back({std::nullopt, anchors.cost_max, anchors.quality_max, 0.0, 0.0});
  std::stable_sort(all.begin(), all.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.cost < b.cost; });

  QualityCostCurve curve;
  curve.anchors = anchors;
  for (const CurvePoint& p : all) {
    if (!curve.points.empty() && curve.points.back().cost == p.cost) {
      if (p.quality > curve.points.back().quality) curve.points.back() = p;
      continue;
    }
    curve.points.push_back(p);
  }
  const double cost_span = anchors.cost_max - anchors.cost_min;
  const double quality_span = anchors.quality_max - anchors.quality_min;
  for (CurvePoint& p : curve.points) {
    const double alpha = (p.cost - anchors.cost_min) / cost_span;
    p.alpha = std::clamp(alpha, 0.0, 1.0);
    if (p.alpha != alpha) ++curve.clamp_events;
    p.quality_norm = (p.quality - anchors.quality_min) / quality_span;
  }
  return curve;
}

QualityCostCurve SweepCurve(const Policy& policy, const EvalData& data,
                            std::span<const double> grid) {
  if (grid.empty()) ThrowInvalidArgument("empty tolerance grid");
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) {
      ThrowInvalidArgument("tolerance grid values must be in [0, 1]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      ThrowInvalidArgument("tolerance grid must be strictly increasing");
    }
  }
  std::vector<CurvePoint> sweep;
  for (double tau : grid) {
    const Selection s = policy.Select(data, tau);
    sweep.push_back({tau, NormalizedCost(data, s), MeanQuality(data, s), 0.0, 0.0});
  }
  return BuildCurve(sweep, ComputeAnchors(data));
}

double BoundedArqgc(const QualityCostCurve& curve, int* clamp_events) {
  const std::vector<CurvePoint>& pts = curve.points;
  if (pts.size() < 2) ThrowInvalidArgument("curve needs at least two points");
  double area = pts.front().alpha * pts.front().quality_norm;
  for (size_t i = 1; i < pts.size(); ++i) {
    area += 0.5 * (pts[i].alpha - pts[i - 1].alpha) *
            (pts[i].quality_norm + pts[i - 1].quality_norm);
  }
  area += (1.0 - pts.back().alpha) * pts.back().quality_norm;
  const double clamped = std::clamp(area, 0.0, 1.0);
  if (clamped != area && clamp_events != nullptr) ++*clamp_events;
  return clamped;
}

double RelArqgc(double policy, double oracle, double random) {
  if (!(oracle > random)) {
    ThrowInvalidArgument("degenerate denominator: oracle B-ARQGC does not exceed random");
  }
  return (policy - random) / (oracle - random);
}

CsrResult CsrAtQuality(const Policy& policy, const EvalData& data, double target_fraction,
                       int grid_points) {
  if (!(target_fraction >= 0.0 && target_fraction <= 1.0)) {
    ThrowInvalidArgument("quality target must be in [0, 1]");
  }
  if (grid_points < 2) ThrowInvalidArgument("CSR grid needs at least two points");
  const Anchors anchors = ComputeAnchors(data);
  const double target = target_fraction * anchors.quality_max;
  CsrResult out;
  out.target_fraction = target_fraction;
  out.target_met = false;
  Selection chosen;
  for (int k = grid_points - 1; k >= 0; --k) {
    const double tau = static_cast<double>(k) / (grid_points - 1);
    Selection s = policy.Select(data, tau);
    const double q = MeanQuality(data, s);
    if (q >= target) {
      out.tolerance = tau;
      out.quality = q;
      out.target_met = true;
      chosen = std::move(s);
      break;
    }
  }
  if (!out.target_met) {
    out.tolerance = 0.0;
    chosen = policy.Select(data, 0.0);
    out.quality = MeanQuality(data, chosen);
  }
  out.cost = NormalizedCost(data, chosen);
  out.csr = (anchors.cost_max - out.cost) / anchors.cost_max;
  out.routing_accuracy = RoutingAccuracy(data, chosen);
  out.shares = RouteShares(data, chosen);
  return out;
}

}  // namespace qroute

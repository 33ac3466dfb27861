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


#include <cstdio>
#include <functional>

#include "json.hpp"
#include "qroute/error.h"
#include "qroute/evalsuite.h"

namespace qroute {
namespace {

using Json = nlohmann::ordered_json;

template <typename F>
auto Metric(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

Json CurveJson(const QualityCostCurve& curve) {
  Json points = Json::array();
  for (const CurvePoint& p : curve.points) {
    Json j;
    j["tolerance"] = p.tolerance ? Json(*p.tolerance) : Json(nullptr);
    j["cost"] = p.cost;
    j["quality"] = p.quality;
    j["alpha"] = p.alpha;
    j["quality_norm"] = p.quality_norm;
    points.push_back(std::move(j));
  }
  return points;
}

}  // namespace

RelativeReference ComputeReference(const EvalData& data, const EvaluationConfig& config) {
  OraclePolicy oracle;
  oracle.Prepare(data);
  RandomPolicy random(config.seed);
  RelativeReference ref;
  ref.oracle = BoundedArqgc(SweepCurve(oracle, data, config.tolerance_grid));
  ref.random = BoundedArqgc(SweepCurve(random, data, config.tolerance_grid));
  return ref;
}

EvaluationReport Evaluate(Policy& policy, const EvalData& data,
                          const EvaluationConfig& config,
                          const RelativeReference* reference) {
  EvaluationReport report;
  report.family = data.family;
  report.policy = policy.name();
  report.candidates = data.candidate_ids;
  report.records = data.num_records();
  report.seed = config.seed;
  report.dataset_fingerprint = data.fingerprint;
  policy.Prepare(data);

  if (const auto* est = policy.Estimates()) {
    report.mae = Metric("mae", [&] { return Mae(*est, data.rewards); });
    const int max_k = static_cast<int>(data.num_candidates()) - 1;
    for (int k : config.top_k) {
      if (k < 1 || k > max_k) continue;
      report.top_k_accuracy[k] =
          Metric("top_k_accuracy", [&] { return TopKAccuracy(*est, data.rewards, k); });
      report.top_k_f1[k] = Metric("top_k_f1", [&] { return TopKF1(*est, data.rewards, k); });
      report.top_k_f1_macro[k] =
          Metric("top_k_f1_macro", [&] { return TopKF1Macro(*est, data.rewards, k); });
    }
  }

  report.curve =
      Metric("curve", [&] { return SweepCurve(policy, data, config.tolerance_grid); });
  report.clamp_events = report.curve.clamp_events;
  report.b_arqgc =
      Metric("b_arqgc", [&] { return BoundedArqgc(report.curve, &report.clamp_events); });
  if (reference != nullptr) {
    report.rel_arqgc = Metric("rel_arqgc", [&] {
      return RelArqgc(report.b_arqgc, reference->oracle, reference->random);
    });
  }
  for (double target : config.csr_targets) {
    report.csr.push_back(Metric(
        "csr", [&] { return CsrAtQuality(policy, data, target, config.csr_grid_points); }));
  }

  report.operating_tolerance = config.operating_tolerance;
  const Selection op = Metric(
      "operating_point", [&] { return policy.Select(data, config.operating_tolerance); });
  report.normalized_cost = Metric("normalized_cost", [&] { return NormalizedCost(data, op); });
  report.quality = MeanQuality(data, op);
  report.route_shares = RouteShares(data, op);
  return report;
}

std::string ReportToJson(const EvaluationReport& report) {
  Json j;
  j["version"] = report.version;
  j["family"] = report.family;
  j["policy"] = report.policy;
  j["candidates"] = report.candidates;
  j["records"] = report.records;
  j["mae"] = report.mae ? Json(*report.mae) : Json(nullptr);
  auto by_k = [](const std::map<int, double>& m) {
    Json o = Json::object();
    for (const auto& [k, v] : m) o[std::to_string(k)] = v;
    return o;
  };
  j["top_k_accuracy"] = by_k(report.top_k_accuracy);
  j["top_k_f1"] = by_k(report.top_k_f1);
  j["top_k_f1_macro"] = by_k(report.top_k_f1_macro);
  j["b_arqgc"] = report.b_arqgc;
  j["rel_arqgc"] = report.rel_arqgc ? Json(*report.rel_arqgc) : Json(nullptr);
  Json csr = Json::array();
  for (const CsrResult& c : report.csr) {
    Json shares = Json::object();
    for (size_t i = 0; i < c.shares.size(); ++i) shares[report.candidates[i]] = c.shares[i];
    csr.push_back({{"target", c.target_fraction},
                   {"tolerance", c.tolerance},
                   {"csr", c.csr},
                   {"routing_accuracy", c.routing_accuracy},
                   {"quality", c.quality},
                   {"cost", c.cost},
                   {"target_met", c.target_met},
                   {"route_shares", shares}});
  }
  j["csr"] = csr;
  Json shares = Json::object();
  for (size_t i = 0; i < report.route_shares.size(); ++i) {
    shares[report.candidates[i]] = report.route_shares[i];
  }
  j["operating_point"] = {{"tolerance", report.operating_tolerance},
                          {"normalized_cost", report.normalized_cost},
                          {"quality", report.quality},
                          {"route_shares", shares}};
  const Anchors& a = report.curve.anchors;
  j["anchors"] = {{"cheapest", report.candidates.at(a.cheapest)},
                  {"strongest", report.candidates.at(a.strongest)},
                  {"cost_min", a.cost_min},
                  {"cost_max", a.cost_max},
                  {"quality_min", a.quality_min},
                  {"quality_max", a.quality_max}};
  j["clamp_events"] = report.clamp_events;
  j["seed"] = std::to_string(report.seed);
  j["dataset_fingerprint"] = report.dataset_fingerprint;
  j["curve_csv_header"] = kCurveCsvHeader;
  j["curve"] = CurveJson(report.curve);
  return j.dump(2) + "\n";
}

std::string CurveToCsv(const QualityCostCurve& curve) {
  std::string out(kCurveCsvHeader);
  out += '\n';
  char buf[160];
  for (const CurvePoint& p : curve.points) {
    if (p.tolerance) {
      std::snprintf(buf, sizeof(buf), "%.17g,", *p.tolerance);
      out += buf;
    } else {
      out += ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", p.cost, p.quality, p.alpha,
                  p.quality_norm);
    out += buf;
  }
  return out;
}

}  // namespace qroute

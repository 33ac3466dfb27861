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


#include "qroute/protocol.h"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json.hpp"
#include "qroute/util.h"

namespace qroute {
namespace {

using Json = nlohmann::ordered_json;

}  // namespace

RouteRequest ParseRouteRequest(std::string_view body) {
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const nlohmann::json::exception&) {
    ThrowInvalidArgument("request body is not valid JSON");
  }
  if (!doc.is_object()) ThrowInvalidArgument("request must be a JSON object");
  RouteRequest req;
  if (doc.contains("v")) {
    if (!doc["v"].is_number_integer() || doc["v"].get<int64_t>() != kProtocolVersion) {
      ThrowInvalidArgument("unsupported protocol version");
    }
  }
  if (doc.contains("request_id")) {
    if (!doc["request_id"].is_string()) ThrowInvalidArgument("request_id must be a string");
    req.request_id = doc["request_id"].get<std::string>();
  }
  if (!doc.contains("prompt") || !doc["prompt"].is_string()) {
    ThrowInvalidArgument("prompt must be a string");
  }
  req.prompt = doc["prompt"].get<std::string>();
  if (req.prompt.empty()) ThrowInvalidArgument("prompt must be nonempty");
  if (doc.contains("tolerance")) {
    if (!doc["tolerance"].is_number()) ThrowInvalidArgument("tolerance must be a number");
    req.tolerance = doc["tolerance"].get<double>();
  }
  if (!(req.tolerance >= 0.0 && req.tolerance <= 1.0)) {
    ThrowInvalidArgument("tolerance must be in [0, 1]");
  }
  if (doc.contains("family")) {
    if (!doc["family"].is_string()) ThrowInvalidArgument("family must be a string");
    req.family = doc["family"].get<std::string>();
  }
  if (doc.contains("candidates")) {
    if (!doc["candidates"].is_array()) ThrowInvalidArgument("candidates must be an array");
    for (const Json& c : doc["candidates"]) {
      if (!c.is_string()) ThrowInvalidArgument("candidates must be strings");
      req.candidates.push_back(c.get<std::string>());
    }
    if (req.candidates.empty()) ThrowInvalidArgument("empty candidate set");
  }
  if (req.request_id.empty()) req.request_id = "req-" + HexDigest(Mix64(Fnv1a64(body)));
  return req;
}

std::string RouteRequestToJson(const RouteRequest& request) {
  Json doc;
  doc["v"] = kProtocolVersion;
  doc["request_id"] = request.request_id;
  doc["prompt"] = request.prompt;
  doc["tolerance"] = request.tolerance;
  if (!request.family.empty()) doc["family"] = request.family;
  if (!request.candidates.empty()) doc["candidates"] = request.candidates;
  return doc.dump();
}

Artifacts LoadArtifacts(const std::string& params_path,
                        std::shared_ptr<const Registry> registry, RouterConfig router) {
  if (!registry) ThrowInvalidArgument("artifacts need a registry");
  auto params = std::make_shared<const EstimatorParameters>(LoadParams(params_path));
  std::shared_ptr<const Encoder> encoder = MakeEncoder(params->encoder_spec);
  ValidateParams(*params, *registry, encoder.get());
  ValidateRouterConfig(router);
  Artifacts a;
  a.registry = std::move(registry);
  a.encoder = std::move(encoder);
  a.estimator = std::make_shared<const QualityEstimator>(std::move(params));
  a.router = std::move(router);
  return a;
}

std::vector<std::string> ResolveCandidates(const Artifacts& artifacts,
                                           const RouteRequest& request) {
  const QualityEstimator& est = *artifacts.estimator;
  if (!request.candidates.empty()) {
    for (const std::string& id : request.candidates) {
      artifacts.registry->Get(id);
      est.IndexOf(id);
    }
    return request.candidates;
  }
  if (!request.family.empty() && request.family != est.params().family) {
    ThrowInvalidArgument("estimator serves family '" + est.params().family + "', not '" +
                         request.family + "'");
  }
  return est.candidate_ids();
}

RoutingDecision Decide(const Artifacts& artifacts, const RouteRequest& request) {
  if (!(request.tolerance >= 0.0 && request.tolerance <= 1.0)) {
    ThrowInvalidArgument("tolerance must be in [0, 1]");
  }
  if (request.prompt.empty()) ThrowInvalidArgument("prompt must be nonempty");
  const std::vector<std::string> ids = ResolveCandidates(artifacts, request);
  const PromptEmbedding embedding = artifacts.encoder->Encode(request.request_id, request.prompt);
  return Route(artifacts.estimator->PredictAll(embedding, ids), request.tolerance,
               artifacts.router, *artifacts.registry);
}

std::string DecisionToJson(const RoutingDecision& d) {
  Json doc;
  doc["selected_model"] = d.selected;
  Json q = Json::object();
  for (size_t i = 0; i < d.estimates.candidate_ids.size(); ++i) {
    q[d.estimates.candidate_ids[i]] = d.estimates.values[i];
  }
  doc["predicted_qualities"] = q;
  doc["threshold"] = d.threshold;
  doc["feasible"] = d.feasible;
  doc["fallback_used"] = d.fallback_used;
  doc["tolerance"] = d.tolerance;
  doc["strategy"] = StrategyName(d.strategy);
  doc["estimator_version"] = d.estimates.estimator_version;
  doc["registry_version"] = d.registry_version;
  return doc.dump();
}

std::string RouteResponseToJson(const std::string& request_id,
                                const std::string& decision_json, int64_t latency_us) {
  const std::string id =
      Json(request_id).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  return "{\"v\":" + std::to_string(kProtocolVersion) + ",\"request_id\":" + id +
         ",\"decision\":" + decision_json + ",\"latency_us\":" + std::to_string(latency_us) +
         "}";
}

std::string ErrorToJson(const std::string& request_id, ErrorCode code,
                        const std::string& message) {
  Json doc;
  doc["v"] = kProtocolVersion;
  doc["request_id"] = request_id;
  doc["error"] = {{"code", ErrorCodeName(code)}, {"message", message}};
  return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

TimedResponse HandleRouteRequest(const Artifacts& artifacts, const RouteRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  TimedResponse out;
  out.decision = Decide(artifacts, request);
  const auto stop = std::chrono::steady_clock::now();
  out.latency_us =
      std::chrono::duration_cast<std::chrono::microseconds>(stop - start).count();
  out.body = RouteResponseToJson(request.request_id, DecisionToJson(out.decision),
                                 out.latency_us);
  return out;
}

}  // namespace qroute

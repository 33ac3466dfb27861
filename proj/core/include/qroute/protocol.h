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


// Wire protocol shared by the CLI and the HTTP service.
//
// Request:
//   {"v":1,"request_id":"r1","prompt":"...","tolerance":0.3,
//    "family":"claude","candidates":["..."]}
//
// Response:
//   {"v":1,"request_id":"r1","decision":{...},"latency_us":12}
//
// The decision object is produced by one function for both front ends, so
// the CLI and the service emit identical bytes for identical inputs.

#ifndef QROUTE_PROTOCOL_H_
#define QROUTE_PROTOCOL_H_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qroute/encoder.h"
#include "qroute/error.h"
#include "qroute/estimator.h"
#include "qroute/registry.h"
#include "qroute/router.h"

namespace qroute {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::string_view kVersionString = "0.1.0";

struct RouteRequest {
  std::string request_id;
  std::string prompt;
  double tolerance = 0.0;
  std::string family;                   // optional
  std::vector<std::string> candidates;  // optional; overrides family
};

// Throws kInvalidArgument with a reason on any schema violation. A missing
// request_id is derived from the request bytes.
RouteRequest ParseRouteRequest(std::string_view body);
std::string RouteRequestToJson(const RouteRequest& request);

// Everything a decision needs. Immutable once built.
struct Artifacts {
  std::shared_ptr<const Registry> registry;
  std::shared_ptr<const Encoder> encoder;
  std::shared_ptr<const QualityEstimator> estimator;
  RouterConfig router;
};

// Loads parameters, builds the matching encoder and validates both against
// the registry.
Artifacts LoadArtifacts(const std::string& params_path,
                        std::shared_ptr<const Registry> registry, RouterConfig router);

// Candidate ids the request is routed over.
std::vector<std::string> ResolveCandidates(const Artifacts& artifacts,
                                           const RouteRequest& request);

// encode -> predict_all -> route.
RoutingDecision Decide(const Artifacts& artifacts, const RouteRequest& request);

std::string DecisionToJson(const RoutingDecision& decision);
std::string RouteResponseToJson(const std::string& request_id,
                                const std::string& decision_json, int64_t latency_us);
std::string ErrorToJson(const std::string& request_id, ErrorCode code,
                        const std::string& message);

struct TimedResponse {
  RoutingDecision decision;
  std::string body;
  int64_t latency_us = 0;
};

// Decides under a monotonic clock and renders the response document.
TimedResponse HandleRouteRequest(const Artifacts& artifacts, const RouteRequest& request);

}  // namespace qroute

#endif  // QROUTE_PROTOCOL_H_

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


#include "qroute/service.h"

#include "httplib.h"
#include "json.hpp"

namespace qroute {
namespace {

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    default:
      return 500;
  }
}

// Best-effort id recovery from a body that failed validation.
std::string SalvageRequestId(std::string_view body) {
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_object() && doc.contains("request_id") && doc["request_id"].is_string()) {
    return doc["request_id"].get<std::string>();
  }
  return "";
}

}  // namespace

RouterService::RouterService(std::shared_ptr<const Artifacts> artifacts)
    : artifacts_(std::move(artifacts)) {
  if (!artifacts_) ThrowInvalidArgument("service needs artifacts");
}

void RouterService::Swap(std::shared_ptr<const Artifacts> artifacts) {
  if (!artifacts) ThrowInvalidArgument("cannot swap in empty artifacts");
  std::lock_guard<std::mutex> lock(mu_);
  artifacts_ = std::move(artifacts);
}

std::shared_ptr<const Artifacts> RouterService::Snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return artifacts_;
}

HttpResponse RouterService::HandleRoute(std::string_view body) const {
  RouteRequest request;
  try {
    request = ParseRouteRequest(body);
  } catch (const Error& e) {
    return {400, ErrorToJson(SalvageRequestId(body), e.code(), e.what())};
  } catch (const std::exception& e) {
    return {400, ErrorToJson(SalvageRequestId(body), ErrorCode::kInvalidArgument, e.what())};
  }
  const std::shared_ptr<const Artifacts> artifacts = Snapshot();
  try {
    return {200, HandleRouteRequest(*artifacts, request).body};
  } catch (const Error& e) {
    return {StatusFor(e.code()), ErrorToJson(request.request_id, e.code(), e.what())};
  } catch (const std::exception& e) {
    return {500, ErrorToJson(request.request_id, ErrorCode::kInternal, e.what())};
  }
}

HttpResponse RouterService::HandleHealth() const {
  const std::shared_ptr<const Artifacts> a = Snapshot();
  nlohmann::ordered_json doc;
  doc["status"] = "ok";
  doc["registry_version"] = a->registry->version();
  doc["estimator_version"] = a->estimator->version();
  doc["family"] = a->estimator->params().family;
  return {200, doc.dump()};
}

HttpResponse RouterService::HandleVersion() const {
  nlohmann::ordered_json doc;
  doc["version"] = kVersionString;
  doc["protocol"] = kProtocolVersion;
  return {200, doc.dump()};
}

struct HttpServer::Impl {
  std::shared_ptr<RouterService> service;
  ServeOptions options;
  httplib::Server server;
};

HttpServer::HttpServer(std::shared_ptr<RouterService> service, ServeOptions options)
    : impl_(std::make_unique<Impl>()) {
  if (!service) ThrowInvalidArgument("server needs a service");
  impl_->service = std::move(service);
  impl_->options = std::move(options);
  const int threads = std::max(1, impl_->options.threads);
  impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  impl_->server.set_payload_max_length(impl_->options.max_body_bytes);
  RouterService* svc = impl_->service.get();
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  impl_->server.Post("/v1/route", [svc, reply](const httplib::Request& req,
                                               httplib::Response& res) {
    reply(res, svc->HandleRoute(req.body));
  });
  impl_->server.Get("/healthz", [svc, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, svc->HandleHealth());
  });
  impl_->server.Get("/version", [svc, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, svc->HandleVersion());
  });
  impl_->server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        res.status = 500;
        res.set_content(ErrorToJson("", ErrorCode::kInternal, "unhandled server error"),
                        "application/json");
      });
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind() {
  const ServeOptions& o = impl_->options;
  int port = o.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(o.host);
    if (port <= 0) ThrowFailedPrecondition("cannot bind " + o.host);
  } else if (!impl_->server.bind_to_port(o.host, port)) {
    ThrowFailedPrecondition("cannot bind " + o.host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::Serve() { impl_->server.listen_after_bind(); }

void HttpServer::Stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace qroute

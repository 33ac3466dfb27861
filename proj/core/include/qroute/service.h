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


// HTTP front end for the router.
//
//   POST /v1/route   RouteRequest -> RouteResponse
//   GET  /healthz    {"status":"ok", registry and estimator versions}
//   GET  /version    build and protocol versions
//
// Malformed requests get a 400 error document; internal failures get a 500
// document echoing the request id. Artifacts can be swapped while serving;
// each request works on the snapshot it grabbed at arrival.

#ifndef QROUTE_SERVICE_H_
#define QROUTE_SERVICE_H_

#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "qroute/protocol.h"

namespace qroute {

struct HttpResponse {
  int status = 200;
  std::string body;
};

class RouterService {
 public:
  explicit RouterService(std::shared_ptr<const Artifacts> artifacts);

  void Swap(std::shared_ptr<const Artifacts> artifacts);
  std::shared_ptr<const Artifacts> Snapshot() const;

  // Transport-independent handlers.
  HttpResponse HandleRoute(std::string_view body) const;
  HttpResponse HandleHealth() const;
  HttpResponse HandleVersion() const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const Artifacts> artifacts_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  int threads = 4;
  size_t max_body_bytes = 1 << 20;
};

class HttpServer {
 public:
  HttpServer(std::shared_ptr<RouterService> service, ServeOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the bound port. Throws kFailedPrecondition on failure.
  int Bind();
  // Blocks until Stop(); in-flight requests finish first.
  void Serve();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qroute

#endif  // QROUTE_SERVICE_H_

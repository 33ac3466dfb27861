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

#include <string>
#include <vector>

#include "benchmark/benchmark.h"
#include "qroute/bench.h"
#include "qroute/protocol.h"
#include "qroute/router.h"

namespace qroute {
namespace {

void BM_PredictAll(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Artifacts artifacts = MakeBenchArtifacts(768, n, 1);
  const PromptEmbedding embedding = artifacts.encoder->Encode("p", BenchPrompt(1000, 2));
  const std::vector<std::string> ids = artifacts.estimator->candidate_ids();
  for (auto _ : state) {
    QualityEstimates q = artifacts.estimator->PredictAll(embedding, ids);
    benchmark::DoNotOptimize(q.values.data());
  }
}
BENCHMARK(BM_PredictAll)->Arg(1)->Arg(5)->Arg(10)->Arg(20);

void BM_RouteIndices(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  std::vector<double> estimates(n);
  std::vector<int64_t> costs(n);
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) {
    estimates[i] = 0.3 + 0.05 * static_cast<double>(i % 7);
    costs[i] = static_cast<int64_t>((i * 7919) % 97);
    order[i] = i;
  }
  const RouterConfig config;
  for (auto _ : state) {
    IndexDecision d = RouteIndices(estimates, costs, order, 0.4, config);
    benchmark::DoNotOptimize(d.selected);
  }
}
BENCHMARK(BM_RouteIndices)->Arg(5)->Arg(10)->Arg(100);

void BM_Decide(benchmark::State& state) {
  const int n = static_cast<int>(state.range(1));
  const Artifacts artifacts = MakeBenchArtifacts(768, n, 1);
  RouteRequest request;
  request.request_id = "bench";
  request.prompt = BenchPrompt(static_cast<int>(state.range(0)), 3);
  request.tolerance = 0.5;
  request.candidates = artifacts.estimator->candidate_ids();
  for (auto _ : state) {
    RoutingDecision d = Decide(artifacts, request);
    benchmark::DoNotOptimize(d.selected.data());
  }
}
BENCHMARK(BM_Decide)->ArgsProduct({{500, 1000}, {5, 10}})->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace qroute

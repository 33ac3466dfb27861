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


#include "qroute/bench.h"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json.hpp"
#include "qroute/util.h"

namespace qroute {

Artifacts MakeBenchArtifacts(int dim, int num_candidates, uint64_t seed) {
  if (num_candidates < 1) ThrowInvalidArgument("bench needs at least one candidate");
  std::vector<ModelCandidate> candidates;
  std::vector<std::string> ids;
  for (int i = 0; i < num_candidates; ++i) {
    ModelCandidate c;
    c.id = "bench-" + std::to_string(i);
    c.family = "bench";
    c.display_name = "Bench " + std::to_string(i);
    c.input_price = Price::FromNanos(100'000 * (i + 1));
    c.output_price = Price::FromNanos(400'000 * (i + 1));
    ids.push_back(c.id);
    candidates.push_back(std::move(c));
  }
  EncoderSpec spec;
  spec.dim = dim;
  Artifacts a;
  a.registry = std::make_shared<const Registry>(std::move(candidates), 1);
  a.encoder = MakeEncoder(spec);
  a.estimator = std::make_shared<const QualityEstimator>(
      std::make_shared<const EstimatorParameters>(
          InitParameters("bench", spec, ids, 256, 128, seed)));
  return a;
}

std::string BenchPrompt(int tokens, uint64_t seed) {
  static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyz";
  Rng rng(seed);
  std::string out;
  for (int t = 0; t < tokens; ++t) {
    if (t > 0) out += ' ';
    const int len = static_cast<int>(rng.Between(2, 9));
    for (int k = 0; k < len; ++k) out += kLetters[rng.Below(26)];
  }
  return out;
}

double Percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) ThrowInvalidArgument("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) ThrowInvalidArgument("percentile must be in (0, 100]");
  const size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * sorted.size()));
  return sorted[std::max<size_t>(rank, 1) - 1];
}

int64_t PeakRssKb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

std::vector<BenchCell> RunBench(const Artifacts& artifacts, const BenchConfig& config) {
  if (config.warmup < 0 || config.iterations < 1) {
    ThrowInvalidArgument("bench needs warmup >= 0 and iterations >= 1");
  }
  const std::vector<std::string>& all = artifacts.estimator->candidate_ids();
  std::vector<BenchCell> cells;
  for (int tokens : config.token_lengths) {
    if (tokens < 1) ThrowInvalidArgument("bench token length must be >= 1");
    RouteRequest request;
    request.request_id = "bench";
    request.prompt = BenchPrompt(tokens, config.seed);
    request.tolerance = config.tolerance;
    for (int k : config.candidate_counts) {
      if (k < 1 || k > static_cast<int>(all.size())) {
        ThrowInvalidArgument("candidate count " + std::to_string(k) +
                             " exceeds the estimator's " + std::to_string(all.size()));
      }
      request.candidates.assign(all.begin(), all.begin() + k);
      for (int i = 0; i < config.warmup; ++i) Decide(artifacts, request);
      std::vector<double> samples;
      samples.reserve(config.iterations);
      for (int i = 0; i < config.iterations; ++i) {
        const auto start = std::chrono::steady_clock::now();
        const RoutingDecision d = Decide(artifacts, request);
        const auto stop = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
      }
      std::sort(samples.begin(), samples.end());
      BenchCell cell;
      cell.tokens = tokens;
      cell.candidates = k;
      cell.warmup = config.warmup;
      cell.iterations = config.iterations;
      cell.p50_us = Percentile(samples, 50);
      cell.p90_us = Percentile(samples, 90);
      cell.p99_us = Percentile(samples, 99);
      cell.peak_rss_kb = PeakRssKb();
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string BenchReportToJson(const std::vector<BenchCell>& cells) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const BenchCell& c : cells) {
    doc.push_back({{"tokens", c.tokens},
                   {"candidates", c.candidates},
                   {"warmup", c.warmup},
                   {"iterations", c.iterations},
                   {"p50_us", c.p50_us},
                   {"p90_us", c.p90_us},
                   {"p99_us", c.p99_us},
                   {"peak_rss_kb", c.peak_rss_kb}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace qroute

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


// Decision-path latency benchmark: for each (prompt length, candidate count)
// cell, time warmup plus measured single-request decisions and report order
// statistics and peak resident memory.

#ifndef QROUTE_BENCH_H_
#define QROUTE_BENCH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "qroute/protocol.h"

namespace qroute {

struct BenchConfig {
  std::vector<int> token_lengths = {500, 1000};
  std::vector<int> candidate_counts = {5, 10};
  int warmup = 100;
  int iterations = 1000;
  double tolerance = 0.5;
  uint64_t seed = 1;
};

struct BenchCell {
  int tokens = 0;
  int candidates = 0;
  int warmup = 0;
  int iterations = 0;
  double p50_us = 0.0;
  double p90_us = 0.0;
  double p99_us = 0.0;
  int64_t peak_rss_kb = 0;
};

// Randomly initialized estimator over `num_candidates` synthetic candidates
// with a hashed encoder of dimension `dim`.
Artifacts MakeBenchArtifacts(int dim, int num_candidates, uint64_t seed);

// Whitespace-separated prompt of `tokens` pseudo-words.
std::string BenchPrompt(int tokens, uint64_t seed);

// Nearest-rank percentile of an ascending sample, p in (0, 100].
double Percentile(const std::vector<double>& sorted, double p);

int64_t PeakRssKb();

std::vector<BenchCell> RunBench(const Artifacts& artifacts, const BenchConfig& config);
std::string BenchReportToJson(const std::vector<BenchCell>& cells);

}  // namespace qroute

#endif  // QROUTE_BENCH_H_

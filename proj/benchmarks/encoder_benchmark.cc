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

#include "benchmark/benchmark.h"
#include "qroute/bench.h"
#include "qroute/encoder.h"

namespace qroute {
namespace {

void BM_HashedEncode(benchmark::State& state) {
  EncoderSpec spec;
  spec.dim = static_cast<int>(state.range(1));
  const HashedNgramEncoder encoder(spec);
  const std::string prompt = BenchPrompt(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    PromptEmbedding e = encoder.Encode("p", prompt);
    benchmark::DoNotOptimize(e.values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HashedEncode)->ArgsProduct({{100, 500, 1000}, {64, 768}});

void BM_HashedEncodeUnigramsOnly(benchmark::State& state) {
  EncoderSpec spec;
  spec.word_bigrams = false;
  spec.char_trigrams = false;
  const HashedNgramEncoder encoder(spec);
  const std::string prompt = BenchPrompt(1000, 1);
  for (auto _ : state) {
    PromptEmbedding e = encoder.Encode("p", prompt);
    benchmark::DoNotOptimize(e.values.data());
  }
}
BENCHMARK(BM_HashedEncodeUnigramsOnly);

}  // namespace
}  // namespace qroute

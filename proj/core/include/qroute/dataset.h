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

// Reward-labeled routing datasets.
//
// One JSONL line is one prompt with labels for every candidate of its family:
//
//   {"v":1,"id":"p1","prompt":"...","family":"claude","input_tokens":42,
//    "labels":{"claude-3-haiku":{"reward":0.61,"output_tokens":210},...}}
//
// Fields are written in exactly that order and labels follow registry order,
// so WriteJsonl(LoadJsonl(f)) reproduces a file written by WriteJsonl
// byte-for-byte. Records that omit any family candidate are rejected.

#ifndef QROUTE_DATASET_H_
#define QROUTE_DATASET_H_

#include <array>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qroute/registry.h"

namespace qroute {

inline constexpr int kDatasetSchemaVersion = 1;

// Multi-turn prompts are flattened into one string joined by this token.
inline constexpr std::string_view kTurnSeparator = " <|turn|> ";
std::string JoinTurns(std::span<const std::string> turns);

struct CandidateLabel {
  double reward = 0.0;        // in [0, 1]
  int64_t output_tokens = 0;  // >= 0

  friend bool operator==(const CandidateLabel&, const CandidateLabel&) = default;
};

struct LabeledCandidate {
  std::string candidate_id;
  CandidateLabel label;

  friend bool operator==(const LabeledCandidate&, const LabeledCandidate&) = default;
};

struct PromptRecord {
  std::string id;
  std::string prompt;
  std::string family;
  int64_t input_tokens = 0;
  // Registry order.
  std::vector<LabeledCandidate> labels;

  // Throws kNotFound if the candidate is not labeled.
  const CandidateLabel& Label(std::string_view candidate_id) const;

  friend bool operator==(const PromptRecord&, const PromptRecord&) = default;
};

struct DatasetSplit {
  std::string name = "custom";  // train, dev, test or custom
  std::vector<PromptRecord> records;

  size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  // Family shared by every record; throws if the split is empty or mixed.
  const std::string& family() const;
};

// Parses and validates. Errors carry the 1-based line number.
DatasetSplit ParseJsonl(std::istream& in, const Registry& registry,
                        std::string name = "custom");
DatasetSplit LoadJsonl(const std::string& path, const Registry& registry,
                       std::string name = "custom");

std::string RecordToJson(const PromptRecord& record);
std::string ToJsonl(const DatasetSplit& split);
void WriteJsonl(const DatasetSplit& split, const std::string& path);

// Hex digest of the canonical JSONL serialization.
std::string Fingerprint(const DatasetSplit& split);

struct SplitFractions {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct SplitResult {
  DatasetSplit train;
  DatasetSplit dev;
  DatasetSplit test;
};

// Seeded shuffle then contiguous cut. Sizes are round(n*train),
// round(n*dev) and the remainder. Fractions must be positive and sum to 1
// within 1e-9.
SplitResult SplitDataset(std::vector<PromptRecord> records,
                         const SplitFractions& fractions, uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic generator.
//
// Two reward models are supported:
//
//  * kUniformIndependent: reward ~ U[mean - spread, mean + spread], drawn
//    independently per (record, candidate) and clipped to [0, 1]. Prompts
//    carry no signal.
//  * kLatentDifficulty: each record draws a difficulty bucket from the
//    mixture weights; its latent difficulty z is the bucket level plus a
//    small jitter. Reward is
//        clip(base_quality - difficulty_penalty * z
//             + slope_c * (z - crossover) + noise_c * N(0, 1), 0, 1)
//    so cheap candidates win on easy prompts and expensive ones on hard
//    prompts. Prompt words are drawn mostly from a per-bucket vocabulary,
//    which gives text featurizers signal about z.

enum class DifficultyModel { kUniformIndependent, kLatentDifficulty };

struct SynthCandidate {
  std::string id;
  double mean = 0.5;    // uniform model: center
  double spread = 0.2;  // uniform model: half width; latent model: noise sd
  double slope = 0.0;   // latent model: sensitivity to (z - crossover)
};

struct SynthConfig {
  std::string family;
  int64_t records = 1000;
  uint64_t seed = 7;
  std::string id_prefix = "syn";
  DifficultyModel model = DifficultyModel::kLatentDifficulty;
  // Empty means derive from cost rank; otherwise one entry per family
  // candidate, any order.
  std::vector<SynthCandidate> candidates;
  // Correlation between capability and cost used when deriving defaults.
  double capability_cost_correlation = 1.0;
  // Latent model.
  std::vector<double> mixture = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  double base_quality = 0.6;
  double difficulty_penalty = 0.3;
  double crossover = 0.3;
  double slope_scale = 0.9;
  double noise = 0.01;
  double jitter = 0.01;
  double topical_word_rate = 0.7;
  int words_per_bucket = 12;
  int filler_words = 60;
  std::array<int64_t, 2> input_tokens = {16, 64};
  std::array<int64_t, 2> output_tokens = {40, 400};
};

SynthConfig ParseSynthConfig(std::string_view json_text);
SynthConfig LoadSynthConfig(const std::string& path);

// Deterministic for a fixed config. Records are named
// "<id_prefix>-<index>".
DatasetSplit Synthesize(const SynthConfig& config, const Registry& registry);

// Per-candidate generator parameters after defaults are applied, in registry
// order. Exposed so tests can compare empirical statistics with the
// configuration.
std::vector<SynthCandidate> ResolveSynthCandidates(const SynthConfig& config,
                                                   const Registry& registry);

}  // namespace qroute

#endif  // QROUTE_DATASET_H_

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

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qroute/dataset.h"
#include "qroute/error.h"
#include "qroute/util.h"

namespace qroute {
namespace {

using json = nlohmann::json;

constexpr std::string_view kConsonants = "bdfghklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

// Pronounceable pseudo-words, unique within one vocabulary.
std::vector<std::string> MakeWords(Rng& rng, int count,
                                   std::set<std::string>& taken) {
  std::vector<std::string> words;
  while (static_cast<int>(words.size()) < count) {
    const int syllables = static_cast<int>(rng.Between(2, 4));
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      w += kConsonants[rng.Below(kConsonants.size())];
      w += kVowels[rng.Below(kVowels.size())];
    }
    if (taken.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

struct Vocabulary {
  std::vector<std::vector<std::string>> topical;  // one pool per bucket
  std::vector<std::string> filler;
};

// The vocabulary depends only on the family and the bucket layout, never on
// the record seed, so independently generated splits share it.
Vocabulary MakeVocabulary(const SynthConfig& config, size_t buckets) {
  Rng rng(Fnv1a64(config.family) ^ 0x766f636162ULL);
  std::set<std::string> taken;
  Vocabulary vocab;
  vocab.filler = MakeWords(rng, config.filler_words, taken);
  for (size_t b = 0; b < buckets; ++b) {
    vocab.topical.push_back(MakeWords(rng, config.words_per_bucket, taken));
  }
  return vocab;
}

size_t DrawBucket(Rng& rng, const std::vector<double>& cumulative) {
  const double u = rng.Uniform() * cumulative.back();
  for (size_t b = 0; b < cumulative.size(); ++b) {
    if (u < cumulative[b]) return b;
  }
  return cumulative.size() - 1;
}

template <typename T>
void ReadIfPresent(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

std::vector<SynthCandidate> ResolveSynthCandidates(const SynthConfig& config,
                                                   const Registry& registry) {
  const std::vector<std::string> ids = registry.IdsOfFamily(config.family);
  if (ids.empty()) ThrowInvalidArgument("unknown family '" + config.family + "'");

  std::vector<SynthCandidate> out;
  if (!config.candidates.empty()) {
    for (const std::string& id : ids) {
      auto it = std::find_if(config.candidates.begin(), config.candidates.end(),
                             [&](const SynthCandidate& c) { return c.id == id; });
      if (it == config.candidates.end()) {
        ThrowInvalidArgument("synth config has no entry for candidate '" + id + "'");
      }
      out.push_back(*it);
    }
    if (config.candidates.size() != ids.size()) {
      ThrowInvalidArgument("synth config names candidates outside family '" +
                           config.family + "'");
    }
    return out;
  }

  // Capability follows cost rank (ties keep registry order).
  std::vector<size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return registry.CostKey(ids[a]) < registry.CostKey(ids[b]);
  });
  std::vector<double> rank(ids.size(), 0.0);
  for (size_t r = 0; r < order.size(); ++r) {
    rank[order[r]] = ids.size() > 1 ? static_cast<double>(r) / (ids.size() - 1) : 0.5;
  }
  const double rho = config.capability_cost_correlation;
  for (size_t i = 0; i < ids.size(); ++i) {
    const double strength = 0.5 + rho * (rank[i] - 0.5);
    SynthCandidate c;
    c.id = ids[i];
    if (config.model == DifficultyModel::kUniformIndependent) {
      c.mean = 0.35 + 0.3 * strength;
      c.spread = 0.3;
    } else {
      c.spread = config.noise;
      c.slope = config.slope_scale * strength;
    }
    out.push_back(std::move(c));
  }
  return out;
}

DatasetSplit Synthesize(const SynthConfig& config, const Registry& registry) {
  if (config.records <= 0) ThrowInvalidArgument("synth record count must be positive");
  if (config.mixture.empty()) ThrowInvalidArgument("synth mixture is empty");
  if (config.input_tokens[0] < 1 || config.input_tokens[1] < config.input_tokens[0] ||
      config.output_tokens[0] < 0 || config.output_tokens[1] < config.output_tokens[0]) {
    ThrowInvalidArgument("synth token ranges are invalid");
  }
  const std::vector<SynthCandidate> candidates =
      ResolveSynthCandidates(config, registry);

  std::vector<double> cumulative;
  double total = 0.0;
  for (double w : config.mixture) {
    if (!(w >= 0.0)) ThrowInvalidArgument("synth mixture weights must be >= 0");
    total += w;
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) ThrowInvalidArgument("synth mixture weights sum to zero");

  const size_t buckets = config.mixture.size();
  const Vocabulary vocab = MakeVocabulary(config, buckets);
  Rng rng(config.seed);

  DatasetSplit split;
  split.name = "custom";
  split.records.reserve(static_cast<size_t>(config.records));
  for (int64_t i = 0; i < config.records; ++i) {
    PromptRecord record;
    record.id = config.id_prefix + "-" + std::to_string(i);
    record.family = config.family;

    const size_t bucket = DrawBucket(rng, cumulative);
    const double level = (static_cast<double>(bucket) + 0.5) / buckets;
    const double z =
        std::clamp(level + rng.Uniform(-config.jitter, config.jitter), 0.0, 1.0);

    record.input_tokens = rng.Between(config.input_tokens[0], config.input_tokens[1]);
    const std::vector<std::string>& topical = vocab.topical[bucket];
    for (int64_t w = 0; w < record.input_tokens; ++w) {
      if (w > 0) record.prompt += ' ';
      if (rng.Uniform() < config.topical_word_rate) {
        record.prompt += topical[rng.Below(topical.size())];
      } else {
        record.prompt += vocab.filler[rng.Below(vocab.filler.size())];
      }
    }

    for (const SynthCandidate& c : candidates) {
      double reward;
      if (config.model == DifficultyModel::kUniformIndependent) {
        reward = rng.Uniform(c.mean - c.spread, c.mean + c.spread);
      } else {
        reward = config.base_quality - config.difficulty_penalty * z +
                 c.slope * (z - config.crossover) + c.spread * rng.Normal();
      }
      CandidateLabel label;
      label.reward = std::clamp(reward, 0.0, 1.0);
      label.output_tokens =
          rng.Between(config.output_tokens[0], config.output_tokens[1]);
      record.labels.push_back({c.id, label});
    }
    split.records.push_back(std::move(record));
  }
  return split;
}

SynthConfig ParseSynthConfig(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    ThrowInvalidArgument(std::string("synth config does not parse: ") + e.what());
  }
  SynthConfig config;
  try {
    ReadIfPresent(doc, "family", config.family);
    ReadIfPresent(doc, "records", config.records);
    ReadIfPresent(doc, "seed", config.seed);
    ReadIfPresent(doc, "id_prefix", config.id_prefix);
    if (doc.contains("difficulty_model")) {
      const std::string model = doc["difficulty_model"].get<std::string>();
      if (model == "uniform_independent" || model == "uniform-independent") {
        config.model = DifficultyModel::kUniformIndependent;
      } else if (model == "latent_difficulty" || model == "latent-difficulty") {
        config.model = DifficultyModel::kLatentDifficulty;
      } else {
        ThrowInvalidArgument("unknown difficulty_model '" + model + "'");
      }
    }
    if (doc.contains("candidates")) {
      for (const json& entry : doc["candidates"]) {
        SynthCandidate c;
        c.id = entry.at("id").get<std::string>();
        ReadIfPresent(entry, "mean", c.mean);
        ReadIfPresent(entry, "spread", c.spread);
        ReadIfPresent(entry, "slope", c.slope);
        config.candidates.push_back(std::move(c));
      }
    }
    ReadIfPresent(doc, "capability_cost_correlation", config.capability_cost_correlation);
    ReadIfPresent(doc, "mixture", config.mixture);
    ReadIfPresent(doc, "base_quality", config.base_quality);
    ReadIfPresent(doc, "difficulty_penalty", config.difficulty_penalty);
    ReadIfPresent(doc, "crossover", config.crossover);
    ReadIfPresent(doc, "slope_scale", config.slope_scale);
    ReadIfPresent(doc, "noise", config.noise);
    ReadIfPresent(doc, "jitter", config.jitter);
    ReadIfPresent(doc, "topical_word_rate", config.topical_word_rate);
    ReadIfPresent(doc, "words_per_bucket", config.words_per_bucket);
    ReadIfPresent(doc, "filler_words", config.filler_words);
    if (doc.contains("input_tokens")) {
      config.input_tokens = doc["input_tokens"].get<std::array<int64_t, 2>>();
    }
    if (doc.contains("output_tokens")) {
      config.output_tokens = doc["output_tokens"].get<std::array<int64_t, 2>>();
    }
  } catch (const json::exception& e) {
    ThrowInvalidArgument(std::string("invalid synth config: ") + e.what());
  }
  if (config.family.empty()) ThrowInvalidArgument("synth config needs a family");
  return config;
}

SynthConfig LoadSynthConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) ThrowNotFound("cannot open synth config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseSynthConfig(buffer.str());
}

}  // namespace qroute

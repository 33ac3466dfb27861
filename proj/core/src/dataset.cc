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

#include "qroute/dataset.h"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "qroute/error.h"
#include "qroute/util.h"

namespace qroute {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void LineError(int64_t line, const std::string& what) {
  ThrowInvalidArgument(what + ", line " + std::to_string(line));
}

int64_t RequireCount(const json& object, const char* field, int64_t line) {
  if (!object.contains(field) || !object.at(field).is_number_integer()) {
    LineError(line, std::string("missing integer field '") + field + "'");
  }
  const int64_t value = object.at(field).get<int64_t>();
  if (value < 0) LineError(line, std::string(field) + " is negative");
  return value;
}

std::string RequireText(const json& object, const char* field, int64_t line) {
  if (!object.contains(field) || !object.at(field).is_string()) {
    LineError(line, std::string("missing string field '") + field + "'");
  }
  return object.at(field).get<std::string>();
}

PromptRecord ParseRecord(const std::string& text, const Registry& registry,
                         int64_t line) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    LineError(line, std::string("malformed record (") + e.what() + ")");
  }
  if (!doc.is_object()) LineError(line, "record is not an object");
  if (!doc.contains("v") || !doc["v"].is_number_integer() ||
      doc["v"].get<int>() != kDatasetSchemaVersion) {
    LineError(line, "missing or unsupported schema version field 'v'");
  }
  PromptRecord record;
  record.id = RequireText(doc, "id", line);
  record.prompt = RequireText(doc, "prompt", line);
  record.family = RequireText(doc, "family", line);
  record.input_tokens = RequireCount(doc, "input_tokens", line);
  if (!doc.contains("labels") || !doc["labels"].is_object() ||
      doc["labels"].empty()) {
    LineError(line, "record has no labels");
  }
  const std::vector<std::string> family_ids = registry.IdsOfFamily(record.family);
  if (family_ids.empty()) {
    LineError(line, "unknown family '" + record.family + "'");
  }
  const json& labels = doc["labels"];
  for (const auto& [candidate_id, value] : labels.items()) {
    if (!registry.Contains(candidate_id)) {
      ThrowInvalidArgument("unknown candidate '" + candidate_id + "' at line " +
                           std::to_string(line));
    }
    if (registry.Get(candidate_id).family != record.family) {
      LineError(line, "candidate '" + candidate_id + "' is not in family '" +
                          record.family + "'");
    }
    if (!value.is_object() || !value.contains("reward") ||
        !value["reward"].is_number()) {
      LineError(line, "label for '" + candidate_id + "' has no numeric reward");
    }
  }
  for (const std::string& id : family_ids) {
    if (!labels.contains(id)) {
      LineError(line, "missing label for candidate '" + id + "'");
    }
    const json& value = labels.at(id);
    const double reward = value["reward"].get<double>();
    if (!(reward >= 0.0 && reward <= 1.0)) {
      LineError(line, "reward out of range");
    }
    CandidateLabel label;
    label.reward = reward;
    label.output_tokens = RequireCount(value, "output_tokens", line);
    record.labels.push_back({id, label});
  }
  return record;
}

}  // namespace

std::string JoinTurns(std::span<const std::string> turns) {
  std::string out;
  for (size_t i = 0; i < turns.size(); ++i) {
    if (i > 0) out += kTurnSeparator;
    out += turns[i];
  }
  return out;
}

const CandidateLabel& PromptRecord::Label(std::string_view candidate_id) const {
  for (const LabeledCandidate& l : labels) {
    if (l.candidate_id == candidate_id) return l.label;
  }
  ThrowNotFound("record '" + id + "' has no label for '" +
                std::string(candidate_id) + "'");
}

const std::string& DatasetSplit::family() const {
  if (records.empty()) ThrowFailedPrecondition("split '" + name + "' is empty");
  for (const PromptRecord& r : records) {
    if (r.family != records.front().family) {
      ThrowFailedPrecondition("split '" + name + "' mixes families");
    }
  }
  return records.front().family;
}

DatasetSplit ParseJsonl(std::istream& in, const Registry& registry,
                        std::string name) {
  DatasetSplit split;
  split.name = std::move(name);
  std::unordered_set<std::string> ids;
  std::string text;
  int64_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    PromptRecord record = ParseRecord(text, registry, line);
    if (!ids.insert(record.id).second) {
      LineError(line, "duplicate record id '" + record.id + "'");
    }
    split.records.push_back(std::move(record));
  }
  return split;
}

DatasetSplit LoadJsonl(const std::string& path, const Registry& registry,
                       std::string name) {
  std::ifstream in(path);
  if (!in) ThrowNotFound("cannot open dataset '" + path + "'");
  return ParseJsonl(in, registry, std::move(name));
}

std::string RecordToJson(const PromptRecord& record) {
  json doc;
  doc["v"] = kDatasetSchemaVersion;
  doc["id"] = record.id;
  doc["prompt"] = record.prompt;
  doc["family"] = record.family;
  doc["input_tokens"] = record.input_tokens;
  json labels = json::object();
  for (const LabeledCandidate& l : record.labels) {
    json entry;
    entry["reward"] = l.label.reward;
    entry["output_tokens"] = l.label.output_tokens;
    labels[l.candidate_id] = std::move(entry);
  }
  doc["labels"] = std::move(labels);
  return doc.dump();
}

std::string ToJsonl(const DatasetSplit& split) {
  std::string out;
  for (const PromptRecord& r : split.records) {
    out += RecordToJson(r);
    out += '\n';
  }
  return out;
}

void WriteJsonl(const DatasetSplit& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ThrowFailedPrecondition("cannot write dataset '" + path + "'");
  out << ToJsonl(split);
  if (!out) ThrowFailedPrecondition("write failed for '" + path + "'");
}

std::string Fingerprint(const DatasetSplit& split) {
  return HexDigest(Fnv1a64(ToJsonl(split)));
}

SplitResult SplitDataset(std::vector<PromptRecord> records,
                         const SplitFractions& fractions, uint64_t seed) {
  if (!(fractions.train > 0 && fractions.dev > 0 && fractions.test > 0)) {
    ThrowInvalidArgument("split fractions must be positive");
  }
  const double total = fractions.train + fractions.dev + fractions.test;
  if (std::fabs(total - 1.0) > 1e-9) {
    ThrowInvalidArgument("split fractions must sum to 1");
  }
  std::unordered_set<std::string> ids;
  for (const PromptRecord& r : records) {
    if (!ids.insert(r.id).second) {
      ThrowInvalidArgument("duplicate record id '" + r.id + "'");
    }
  }
  Rng rng(seed);
  rng.Shuffle(records);
  const double n = static_cast<double>(records.size());
  size_t n_train = static_cast<size_t>(std::llround(n * fractions.train));
  size_t n_dev = static_cast<size_t>(std::llround(n * fractions.dev));
  n_train = std::min(n_train, records.size());
  n_dev = std::min(n_dev, records.size() - n_train);

  SplitResult result;
  result.train.name = "train";
  result.dev.name = "dev";
  result.test.name = "test";
  for (size_t i = 0; i < records.size(); ++i) {
    DatasetSplit& target = i < n_train           ? result.train
                           : i < n_train + n_dev ? result.dev
                                                 : result.test;
    target.records.push_back(std::move(records[i]));
  }
  return result;
}

}  // namespace qroute

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

#include "qroute/registry.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "default_registry.h"
#include "json.hpp"
#include "qroute/error.h"

namespace qroute {
namespace {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;
constexpr int kFractionDigits = 9;

Price ParsePriceField(const json& candidate, const char* field,
                      const std::string& id) {
  if (!candidate.contains(field)) {
    ThrowInvalidArgument("candidate '" + id + "' is missing " + field);
  }
  const json& value = candidate.at(field);
  Price price;
  if (value.is_number()) {
    price = Price::FromDouble(value.get<double>());
  } else if (value.is_string()) {
    price = Price::FromDecimalString(value.get<std::string>());
  } else {
    ThrowInvalidArgument("candidate '" + id + "': " + field +
                         " must be a number or decimal string");
  }
  if (price.nanos() < 0) {
    ThrowInvalidArgument("negative price for candidate '" + id + "' (" +
                         field + ")");
  }
  return price;
}

std::string RequireString(const json& object, const char* field,
                          const std::string& context) {
  if (!object.contains(field) || !object.at(field).is_string()) {
    ThrowInvalidArgument(context + ": missing string field '" + field + "'");
  }
  return object.at(field).get<std::string>();
}

}  // namespace

Price Price::FromDecimalString(std::string_view text) {
  if (text.empty()) ThrowInvalidArgument("empty price");
  bool negative = false;
  size_t pos = 0;
  if (text[0] == '-') {
    negative = true;
    pos = 1;
  }
  int64_t whole = 0;
  int64_t frac = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  bool seen_digit = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c == '.') {
      if (seen_dot) ThrowInvalidArgument("malformed price '" + std::string(text) + "'");
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') {
      ThrowInvalidArgument("malformed price '" + std::string(text) + "'");
    }
    seen_digit = true;
    if (seen_dot) {
      if (++frac_digits > kFractionDigits) {
        ThrowInvalidArgument("price '" + std::string(text) +
                             "' has more than 9 decimal places");
      }
      frac = frac * 10 + (c - '0');
    } else {
      whole = whole * 10 + (c - '0');
      if (whole > 1'000'000'000) {
        ThrowInvalidArgument("price '" + std::string(text) + "' is too large");
      }
    }
  }
  if (!seen_digit) ThrowInvalidArgument("malformed price '" + std::string(text) + "'");
  for (int i = frac_digits; i < kFractionDigits; ++i) frac *= 10;
  const int64_t nanos = whole * kScale + frac;
  return Price(negative ? -nanos : nanos);
}

Price Price::FromDouble(double value) {
  if (!std::isfinite(value) || std::fabs(value) > 1e9) {
    ThrowInvalidArgument("price out of representable range");
  }
  const double scaled = value * static_cast<double>(kScale);
  const double rounded = std::nearbyint(scaled);
  if (std::fabs(scaled - rounded) > std::max(1e-6, std::fabs(scaled) * 1e-15)) {
    ThrowInvalidArgument("price has more than 9 decimal places");
  }
  return Price(static_cast<int64_t>(rounded));
}

std::string Price::ToDecimalString() const {
  const bool negative = nanos_ < 0;
  const int64_t magnitude = negative ? -nanos_ : nanos_;
  std::string out = std::to_string(magnitude / kScale);
  int64_t frac = magnitude % kScale;
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, kFractionDigits - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += "." + digits;
  }
  return negative ? "-" + out : out;
}

Registry::Registry(std::vector<ModelCandidate> candidates, int64_t version)
    : candidates_(std::move(candidates)), version_(version) {
  if (candidates_.empty()) ThrowInvalidArgument("empty registry");
  for (size_t i = 0; i < candidates_.size(); ++i) {
    const ModelCandidate& c = candidates_[i];
    if (c.id.empty()) ThrowInvalidArgument("candidate with empty id");
    if (c.family.empty()) {
      ThrowInvalidArgument("candidate '" + c.id + "' has empty family");
    }
    if (c.input_price.nanos() < 0 || c.output_price.nanos() < 0) {
      ThrowInvalidArgument("negative price for candidate '" + c.id + "'");
    }
    if (!index_.emplace(c.id, i).second) {
      throw Error(ErrorCode::kAlreadyExists, "duplicate candidate id '" + c.id + "'");
    }
  }
}

bool Registry::Contains(std::string_view id) const {
  return index_.count(std::string(id)) > 0;
}

size_t Registry::IndexOf(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    ThrowNotFound("unknown candidate '" + std::string(id) + "'");
  }
  return it->second;
}

const ModelCandidate& Registry::Get(std::string_view id) const {
  return candidates_[IndexOf(id)];
}

const ModelCandidate& Registry::Find(std::string_view id_or_display_name) const {
  auto it = index_.find(std::string(id_or_display_name));
  if (it != index_.end()) return candidates_[it->second];
  for (const ModelCandidate& c : candidates_) {
    if (c.display_name == id_or_display_name) return c;
  }
  ThrowNotFound("unknown candidate '" + std::string(id_or_display_name) + "'");
}

std::vector<ModelCandidate> Registry::CandidatesOfFamily(
    std::string_view family) const {
  std::vector<ModelCandidate> out;
  for (const ModelCandidate& c : candidates_) {
    if (c.family == family) out.push_back(c);
  }
  return out;
}

std::vector<std::string> Registry::IdsOfFamily(std::string_view family) const {
  std::vector<std::string> out;
  for (const ModelCandidate& c : candidates_) {
    if (c.family == family) out.push_back(c.id);
  }
  return out;
}

std::vector<std::string> Registry::Families() const {
  std::vector<std::string> out;
  for (const ModelCandidate& c : candidates_) {
    bool seen = false;
    for (const std::string& f : out) seen = seen || f == c.family;
    if (!seen) out.push_back(c.family);
  }
  return out;
}

int64_t Registry::CostKey(std::string_view id, const CostWeights& weights) const {
  const ModelCandidate& c = Get(id);
  return c.input_price.nanos() * weights.input_tokens +
         c.output_price.nanos() * weights.output_tokens;
}

Registry Registry::WithCandidate(ModelCandidate candidate) const {
  std::vector<ModelCandidate> next = candidates_;
  next.push_back(std::move(candidate));
  return Registry(std::move(next), version_ + 1);
}

std::string Registry::ToJson() const {
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["version"] = version_;
  json list = json::array();
  for (const ModelCandidate& c : candidates_) {
    json entry;
    entry["id"] = c.id;
    entry["family"] = c.family;
    entry["display_name"] = c.display_name;
    entry["input_price_per_1k"] = c.input_price.ToDecimalString();
    entry["output_price_per_1k"] = c.output_price.ToDecimalString();
    list.push_back(std::move(entry));
  }
  doc["candidates"] = std::move(list);
  return doc.dump(2) + "\n";
}

Registry LoadRegistryFromString(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    ThrowInvalidArgument(std::string("registry document does not parse: ") +
                         e.what());
  }
  if (!doc.is_object()) ThrowInvalidArgument("registry document must be an object");
  if (doc.contains("schema") &&
      (!doc["schema"].is_number_integer() || doc["schema"].get<int>() != kSchemaVersion)) {
    ThrowInvalidArgument("unsupported registry schema");
  }
  int64_t version = 1;
  if (doc.contains("version")) {
    if (!doc["version"].is_number_integer()) {
      ThrowInvalidArgument("registry version must be an integer");
    }
    version = doc["version"].get<int64_t>();
  }
  if (!doc.contains("candidates") || !doc["candidates"].is_array()) {
    ThrowInvalidArgument("registry document has no candidates array");
  }
  std::vector<ModelCandidate> candidates;
  for (const json& entry : doc["candidates"]) {
    if (!entry.is_object()) ThrowInvalidArgument("candidate entry must be an object");
    ModelCandidate c;
    c.id = RequireString(entry, "id", "candidate");
    c.family = RequireString(entry, "family", "candidate '" + c.id + "'");
    c.display_name = entry.contains("display_name") && entry["display_name"].is_string()
                         ? entry["display_name"].get<std::string>()
                         : c.id;
    c.input_price = ParsePriceField(entry, "input_price_per_1k", c.id);
    c.output_price = ParsePriceField(entry, "output_price_per_1k", c.id);
    candidates.push_back(std::move(c));
  }
  return Registry(std::move(candidates), version);
}

Registry LoadRegistryFromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) ThrowNotFound("cannot open registry file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return LoadRegistryFromString(buffer.str());
}

std::string_view DefaultRegistryDocument() { return internal::kDefaultRegistryJson; }

const Registry& DefaultRegistry() {
  static const Registry* registry =
      new Registry(LoadRegistryFromString(DefaultRegistryDocument()));
  return *registry;
}

}  // namespace qroute

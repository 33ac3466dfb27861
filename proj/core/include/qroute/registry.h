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

// Candidate models and their unit prices.
//
// A Registry is an immutable, versioned, insertion-ordered set of
// ModelCandidate values. It is the only source of cost data for routing and
// evaluation. Prices are held as exact scaled integers (Price) so that cost
// comparisons never depend on binary floating point rounding.
//
// Configuration document (JSON):
//
//   {"schema": 1, "version": 3, "candidates": [
//      {"id": "...", "family": "...", "display_name": "...",
//       "input_price_per_1k": 0.003, "output_price_per_1k": "0.015"}]}
//
// Prices may be JSON numbers or decimal strings; both are interpreted as
// currency per 1,000 tokens with at most nine decimal places.

#ifndef QROUTE_REGISTRY_H_
#define QROUTE_REGISTRY_H_

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qroute {

// Currency per 1,000 tokens in units of 1e-9.
class Price {
 public:
  static constexpr int64_t kScale = 1'000'000'000;

  constexpr Price() = default;
  static constexpr Price FromNanos(int64_t nanos) { return Price(nanos); }
  // Parses a plain decimal such as "0.00006". Rejects signs other than a
  // leading '-', exponents, and more than nine fractional digits.
  static Price FromDecimalString(std::string_view text);
  // Accepts doubles that are exactly representable at nine decimals after
  // rounding; anything finer is rejected.
  static Price FromDouble(double value);

  constexpr int64_t nanos() const { return nanos_; }
  double per_1k() const { return static_cast<double>(nanos_) / kScale; }
  double per_token() const { return per_1k() / 1000.0; }
  // Canonical decimal text, e.g. "0.00006".
  std::string ToDecimalString() const;

  friend constexpr auto operator<=>(Price, Price) = default;

 private:
  constexpr explicit Price(int64_t nanos) : nanos_(nanos) {}
  int64_t nanos_ = 0;
};

struct ModelCandidate {
  std::string id;
  std::string family;
  std::string display_name;
  Price input_price;   // per 1K input tokens
  Price output_price;  // per 1K output tokens

  friend bool operator==(const ModelCandidate&, const ModelCandidate&) = default;
};

// Expected token counts used to turn unit prices into one scalar cost rank at
// decision time. The default (1, 1) ranks by input_price + output_price.
struct CostWeights {
  int64_t input_tokens = 1;
  int64_t output_tokens = 1;
};

class Registry {
 public:
  Registry(std::vector<ModelCandidate> candidates, int64_t version);

  const std::vector<ModelCandidate>& candidates() const { return candidates_; }
  int64_t version() const { return version_; }
  size_t size() const { return candidates_.size(); }

  bool Contains(std::string_view id) const;
  // Throws kNotFound naming the id.
  const ModelCandidate& Get(std::string_view id) const;
  // Position in insertion order; throws kNotFound.
  size_t IndexOf(std::string_view id) const;
  // Looks up by id first, then by display name. Throws kNotFound.
  const ModelCandidate& Find(std::string_view id_or_display_name) const;

  // Stable-ordered sublist; empty if the family is unknown.
  std::vector<ModelCandidate> CandidatesOfFamily(std::string_view family) const;
  std::vector<std::string> IdsOfFamily(std::string_view family) const;
  std::vector<std::string> Families() const;

  // Scalar decision-time cost rank in nano-currency units. Exact integer
  // arithmetic; throws kNotFound for unknown ids.
  int64_t CostKey(std::string_view id, const CostWeights& weights = {}) const;

  // Returns a new registry with `candidate` appended and version + 1.
  Registry WithCandidate(ModelCandidate candidate) const;

  std::string ToJson() const;

  friend bool operator==(const Registry&, const Registry&) = default;

 private:
  std::vector<ModelCandidate> candidates_;
  int64_t version_;
  std::unordered_map<std::string, size_t> index_;
};

Registry LoadRegistryFromString(std::string_view document);
Registry LoadRegistryFromFile(const std::string& path);
// The bundled default encoding the published unit-price table.
const Registry& DefaultRegistry();
std::string_view DefaultRegistryDocument();

}  // namespace qroute

#endif  // QROUTE_REGISTRY_H_

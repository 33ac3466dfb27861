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
#include <bit>
#include <cmath>
#include <numeric>

#include "qroute/error.h"
#include "qroute/evalsuite.h"
#include "qroute/util.h"

namespace qroute {
namespace {

uint64_t TauSeed(uint64_t seed, double tau) {
  return Mix64(seed ^ Mix64(std::bit_cast<uint64_t>(tau)));
}

size_t CandidateIndex(const EvalData& data, const std::string& id) {
  for (size_t c = 0; c < data.num_candidates(); ++c) {
    if (data.candidate_ids[c] == id) return c;
  }
  ThrowNotFound("candidate '" + id + "' is not part of the evaluation set");
}

}  // namespace

EstimatorPolicy::EstimatorPolicy(std::shared_ptr<const QualityEstimator> estimator,
                                 std::shared_ptr<const Encoder> encoder, RouterConfig config,
                                 std::string name)
    : estimator_(std::move(estimator)),
      encoder_(std::move(encoder)),
      config_(std::move(config)),
      name_(std::move(name)) {
  if (!estimator_ || !encoder_) {
    ThrowInvalidArgument("estimator policy needs an estimator and encoder");
  }
  ValidateRouterConfig(config_);
}

void EstimatorPolicy::Prepare(const EvalData& data) {
  std::vector<size_t> indices;
  for (const std::string& id : data.candidate_ids) indices.push_back(estimator_->IndexOf(id));
  cost_keys_.clear();
  for (const std::string& id : data.candidate_ids) {
    cost_keys_.push_back(data.registry->CostKey(id, config_.cost_weights));
  }
  estimates_.assign(data.num_records(), std::vector<double>(indices.size()));
  for (size_t i = 0; i < data.num_records(); ++i) {
    const PromptRecord& r = data.split->records[i];
    const PromptEmbedding p = encoder_->Encode(r.id, r.prompt);
    if (static_cast<int>(p.values.size()) != estimator_->params().input_dim()) {
      ThrowInvalidArgument("encoder dimension does not match the estimator");
    }
    estimator_->ScoreIndices(p.values, indices, estimates_[i]);
  }
}

Selection EstimatorPolicy::Select(const EvalData& data, double tolerance) const {
  if (estimates_.size() != data.num_records()) {
    ThrowFailedPrecondition("estimator policy was not prepared for this dataset");
  }
  Selection s(data.num_records());
  for (size_t i = 0; i < s.size(); ++i) {
    s[i] = RouteIndices(estimates_[i], cost_keys_, data.order, tolerance, config_).selected;
  }
  return s;
}

Selection OraclePolicy::Select(const EvalData& data, double tolerance) const {
  const RouterConfig config;
  Selection s(data.num_records());
  for (size_t i = 0; i < s.size(); ++i) {
    s[i] = RouteIndices(data.rewards[i], data.cost_keys, data.order, tolerance, config)
               .selected;
  }
  return s;
}

std::string StaticPolicy::name() const {
  return choice_ == StaticChoice::kStrongest ? "static_strongest" : "static_cheapest";
}

Selection StaticPolicy::Select(const EvalData& data, double /*tolerance*/) const {
  const Anchors a = ComputeAnchors(data);
  return Selection(data.num_records(),
                   choice_ == StaticChoice::kStrongest ? a.strongest : a.cheapest);
}

Selection FixedPolicy::Select(const EvalData& data, double /*tolerance*/) const {
  return Selection(data.num_records(), CandidateIndex(data, candidate_id_));
}

Selection RandomPolicy::Select(const EvalData& data, double tolerance) const {
  if (!(tolerance >= 0.0 && tolerance <= 1.0)) {
    ThrowInvalidArgument("tolerance must be in [0, 1]");
  }
  const Anchors a = ComputeAnchors(data);
  Rng rng(TauSeed(seed_, tolerance));
  Selection s(data.num_records());
  for (size_t& c : s) c = rng.Uniform() < tolerance ? a.cheapest : a.strongest;
  return s;
}

Selection UniformRandomPolicy::Select(const EvalData& data, double tolerance) const {
  Rng rng(TauSeed(seed_, tolerance));
  Selection s(data.num_records());
  for (size_t& c : s) c = static_cast<size_t>(rng.Below(data.num_candidates()));
  return s;
}

BudgetAwareRandomPolicy::BudgetAwareRandomPolicy(std::shared_ptr<Policy> reference,
                                                 uint64_t seed)
    : reference_(std::move(reference)), seed_(seed) {
  if (!reference_) ThrowInvalidArgument("budget-aware random policy needs a reference policy");
}

Selection BudgetAwareRandomPolicy::Draw(std::span<const double> shares, size_t n,
                                        uint64_t seed) {
  if (shares.empty()) ThrowInvalidArgument("empty route shares");
  double total = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0)) ThrowInvalidArgument("route shares must be non-negative");
    total += s;
  }
  if (!(total > 0.0)) ThrowInvalidArgument("route shares sum to zero");
  std::vector<double> cumulative(shares.size());
  double acc = 0.0;
  for (size_t c = 0; c < shares.size(); ++c) {
    acc += shares[c] / total;
    cumulative[c] = acc;
  }
  Rng rng(seed);
  Selection s(n);
  for (size_t& c : s) {
    const double u = rng.Uniform();
    c = static_cast<size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                            cumulative.begin());
    if (c >= shares.size()) {
      c = shares.size() - 1;
      while (c > 0 && shares[c] == 0.0) --c;
    }
  }
  return s;
}

Selection BudgetAwareRandomPolicy::Select(const EvalData& data, double tolerance) const {
  const std::vector<double> shares = RouteShares(data, reference_->Select(data, tolerance));
  return Draw(shares, data.num_records(), TauSeed(seed_, tolerance));
}

BinaryClassifierPolicy::BinaryClassifierPolicy(std::shared_ptr<const Encoder> encoder,
                                               ClassifierConfig config)
    : encoder_(std::move(encoder)), config_(config) {
  if (!encoder_) ThrowInvalidArgument("binary classifier needs an encoder");
}

void BinaryClassifierPolicy::Fit(const DatasetSplit& train, const Registry& registry,
                                 std::vector<std::string> candidates) {
  const EvalData data = EvalData::Build(train, registry, std::move(candidates));
  const Anchors anchors = ComputeAnchors(data);
  std::vector<std::vector<double>> features;
  std::vector<double> targets;
  for (size_t i = 0; i < data.num_records(); ++i) {
    const PromptRecord& r = train.records[i];
    features.push_back(encoder_->Encode(r.id, r.prompt).values);
    const std::vector<double>& rw = data.rewards[i];
    const double best = *std::max_element(rw.begin(), rw.end());
    targets.push_back(rw[anchors.cheapest] >= best - config_.margin ? 1.0 : 0.0);
  }
  const size_t d = static_cast<size_t>(encoder_->dim());
  weights_.assign(d, 0.0);
  bias_ = 0.0;
  Rng rng(Mix64(config_.seed ^ 0x636c66ULL));
  std::vector<size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(d);
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    rng.Shuffle(order);
    for (size_t start = 0; start < order.size(); start += config_.batch_size) {
      const size_t end = std::min(order.size(), start + config_.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double grad_b = 0.0;
      for (size_t k = start; k < end; ++k) {
        const std::vector<double>& x = features[order[k]];
        const double err = (Probability(x) - targets[order[k]]) * inv;
        for (size_t j = 0; j < d; ++j) grad[j] += err * x[j];
        grad_b += err;
      }
      for (size_t j = 0; j < d; ++j) {
        weights_[j] -= config_.learning_rate * (grad[j] + config_.l2 * weights_[j]);
      }
      bias_ -= config_.learning_rate * grad_b;
    }
  }
  cheapest_id_ = data.candidate_ids[anchors.cheapest];
  strongest_id_ = data.candidate_ids[anchors.strongest];
}

double BinaryClassifierPolicy::Probability(std::span<const double> features) const {
  if (features.size() != weights_.size()) {
    ThrowInvalidArgument("classifier feature dimension mismatch");
  }
  double z = bias_;
  for (size_t j = 0; j < features.size(); ++j) z += weights_[j] * features[j];
  return Sigmoid(z);
}

void BinaryClassifierPolicy::Prepare(const EvalData& data) {
  if (!fitted()) ThrowFailedPrecondition("binary classifier has not been fitted");
  probabilities_.clear();
  for (const PromptRecord& r : data.split->records) {
    probabilities_.push_back(Probability(encoder_->Encode(r.id, r.prompt).values));
  }
}

Selection BinaryClassifierPolicy::Select(const EvalData& data, double tolerance) const {
  if (probabilities_.size() != data.num_records()) {
    ThrowFailedPrecondition("binary classifier was not prepared for this dataset");
  }
  const size_t cheap = CandidateIndex(data, cheapest_id_);
  const size_t strong = CandidateIndex(data, strongest_id_);
  Selection s(data.num_records());
  for (size_t i = 0; i < s.size(); ++i) {
    s[i] = probabilities_[i] >= 1.0 - tolerance ? cheap : strong;
  }
  return s;
}

}  // namespace qroute

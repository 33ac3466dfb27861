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


#include "qroute/estimator.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nn.h"
#include "qroute/error.h"
#include "qroute/util.h"

namespace qroute {
namespace {

uint64_t HashDoubles(std::span<const double> values, uint64_t h) {
  return Fnv1a64(std::string_view(reinterpret_cast<const char*>(values.data()),
                                  values.size() * sizeof(double)),
                 h);
}

uint64_t HashPredictor(const PredictorParameters& net, uint64_t h) {
  h = HashDoubles(net.w1, h);
  h = HashDoubles(net.b1, h);
  h = HashDoubles(net.w2, h);
  return HashDoubles(std::span<const double>(&net.b2, 1), h);
}

void CheckPromptDim(const EstimatorParameters& params, const PromptEmbedding& embedding) {
  if (static_cast<int>(embedding.values.size()) != params.input_dim()) {
    ThrowInvalidArgument("embedding dimension " + std::to_string(embedding.values.size()) +
                         " does not match estimator input dimension " +
                         std::to_string(params.input_dim()));
  }
  if (!embedding.encoder_id.empty() && !params.encoder_id.empty() &&
      embedding.encoder_id != params.encoder_id) {
    ThrowInvalidArgument("embedding from encoder '" + embedding.encoder_id +
                         "' but estimator expects '" + params.encoder_id + "'");
  }
}

}  // namespace

std::vector<std::string> EstimatorParameters::CandidateIds() const {
  std::vector<std::string> ids;
  ids.reserve(identities.size() + 1);
  for (const IdentityEmbedding& e : identities) ids.push_back(e.candidate_id);
  if (adapter) ids.push_back(adapter->identity.candidate_id);
  return ids;
}

bool EstimatorParameters::HasCandidate(std::string_view id) const {
  for (const IdentityEmbedding& e : identities) {
    if (e.candidate_id == id) return true;
  }
  return adapter && adapter->identity.candidate_id == id;
}

bool operator==(const EstimatorParameters& a, const EstimatorParameters& b) {
  return a.family == b.family && a.encoder_spec == b.encoder_spec &&
         a.encoder_id == b.encoder_id && a.identities == b.identities &&
         a.predictor == b.predictor && a.metadata == b.metadata && a.adapter == b.adapter;
}

std::string EstimatorVersion(const EstimatorParameters& params) {
  uint64_t h = Fnv1a64(params.family);
  h = Fnv1a64(params.encoder_id, h);
  for (const IdentityEmbedding& e : params.identities) {
    h = Fnv1a64(e.candidate_id, h);
    h = HashDoubles(e.values, h);
  }
  h = HashPredictor(params.predictor, h);
  if (params.adapter) {
    const AdapterBlock& ad = *params.adapter;
    h = Fnv1a64(ad.identity.candidate_id, h);
    h = HashDoubles(ad.identity.values, h);
    h = HashDoubles(ad.prompt.wa, h);
    h = HashDoubles(ad.prompt.ba, h);
    h = HashDoubles(ad.prompt.wb, h);
    h = HashDoubles(ad.prompt.bb, h);
    h = HashDoubles(ad.lie.a, h);
    h = HashDoubles(ad.lie.c, h);
    h = HashPredictor(ad.head, h);
  }
  return params.family + "-" + HexDigest(Mix64(h));
}

EstimatorParameters InitParameters(std::string family, const EncoderSpec& encoder_spec,
                                   std::span<const std::string> candidate_ids, int hidden,
                                   int identity_dim, uint64_t seed) {
  if (candidate_ids.empty()) ThrowInvalidArgument("empty candidate set");
  if (hidden < 1 || identity_dim < 1 || encoder_spec.dim < 1) {
    ThrowInvalidArgument("estimator dimensions must be >= 1");
  }
  for (size_t i = 0; i < candidate_ids.size(); ++i) {
    for (size_t j = 0; j < i; ++j) {
      if (candidate_ids[i] == candidate_ids[j]) {
        ThrowInvalidArgument("duplicate candidate '" + candidate_ids[i] + "'");
      }
    }
  }
  EstimatorParameters params;
  params.family = std::move(family);
  params.encoder_spec = encoder_spec;
  params.encoder_id = EncoderIdOf(encoder_spec);
  Rng rng(seed);
  params.predictor = internal::GlorotPredictor(rng, encoder_spec.dim, identity_dim, hidden);
  for (const std::string& id : candidate_ids) {
    IdentityEmbedding e;
    e.candidate_id = id;
    e.values.resize(identity_dim);
    for (double& v : e.values) v = rng.Normal(0.0, 0.01);
    params.identities.push_back(std::move(e));
  }
  params.metadata.seed = seed;
  return params;
}

double QualityEstimates::Get(std::string_view candidate_id) const {
  for (size_t i = 0; i < candidate_ids.size(); ++i) {
    if (candidate_ids[i] == candidate_id) return values[i];
  }
  ThrowNotFound("no estimate for candidate '" + std::string(candidate_id) + "'");
}

double ForwardPredictor(const PredictorParameters& predictor, std::span<const double> p,
                        std::span<const double> e) {
  std::vector<double> pp(predictor.hidden);
  std::vector<double> ib(predictor.hidden);
  internal::PromptProjection(predictor, p, pp);
  internal::IdentityBias(predictor, e, ib);
  return Sigmoid(internal::Logit(predictor, pp.data(), ib.data()));
}

double Predict(const EstimatorParameters& params, const PromptEmbedding& embedding,
               std::string_view candidate_id) {
  CheckPromptDim(params, embedding);
  const IdentityEmbedding* core = nullptr;
  for (const IdentityEmbedding& e : params.identities) {
    if (e.candidate_id == candidate_id) core = &e;
  }
  if (!params.adapter) {
    if (core == nullptr) {
      ThrowNotFound("unknown candidate '" + std::string(candidate_id) + "'");
    }
    return ForwardPredictor(params.predictor, embedding.values, core->values);
  }
  const AdapterBlock& ad = *params.adapter;
  const bool is_new = ad.identity.candidate_id == candidate_id;
  if (core == nullptr && !is_new) {
    ThrowNotFound("unknown candidate '" + std::string(candidate_id) + "'");
  }
  std::vector<double> hidden(ad.prompt.width);
  std::vector<double> p(embedding.values.size());
  internal::AdaptPrompt(ad.prompt, embedding.values, hidden, p);
  std::vector<double> e(params.identity_dim());
  internal::AdaptIdentity(ad.lie, is_new ? ad.identity.values : core->values, e);
  return ForwardPredictor(is_new ? ad.head : params.predictor, p, e);
}

QualityEstimates PredictAll(const EstimatorParameters& params,
                            const PromptEmbedding& embedding,
                            std::span<const std::string> candidate_ids) {
  if (candidate_ids.empty()) ThrowInvalidArgument("empty candidate set");
  QualityEstimates out;
  out.prompt_id = embedding.prompt_id;
  out.estimator_version = EstimatorVersion(params);
  for (const std::string& id : candidate_ids) {
    out.candidate_ids.push_back(id);
    out.values.push_back(Predict(params, embedding, id));
  }
  return out;
}

QualityEstimator::QualityEstimator(std::shared_ptr<const EstimatorParameters> params)
    : params_(std::move(params)) {
  if (!params_) ThrowInvalidArgument("null estimator parameters");
  const EstimatorParameters& p = *params_;
  version_ = EstimatorVersion(p);
  ids_ = p.CandidateIds();
  const int d_id = p.identity_dim();
  std::vector<double> e(d_id);
  for (size_t i = 0; i < ids_.size(); ++i) {
    index_.emplace(ids_[i], i);
    const bool is_new = i >= p.identities.size();
    const PredictorParameters& net = is_new ? p.adapter->head : p.predictor;
    const std::vector<double>& raw =
        is_new ? p.adapter->identity.values : p.identities[i].values;
    if (static_cast<int>(raw.size()) != d_id) {
      ThrowInvalidArgument("identity embedding for '" + ids_[i] + "' has wrong dimension");
    }
    if (p.adapter) {
      internal::AdaptIdentity(p.adapter->lie, raw, e);
    } else {
      e = raw;
    }
    Slot slot{&net, std::vector<double>(net.hidden), is_new};
    internal::IdentityBias(net, e, slot.identity_bias);
    slots_.push_back(std::move(slot));
  }
}

size_t QualityEstimator::IndexOf(std::string_view candidate_id) const {
  auto it = index_.find(std::string(candidate_id));
  if (it == index_.end()) {
    ThrowNotFound("unknown candidate '" + std::string(candidate_id) + "'");
  }
  return it->second;
}

void QualityEstimator::ScoreIndices(std::span<const double> p,
                                    std::span<const size_t> indices,
                                    std::span<double> out) const {
  const EstimatorParameters& params = *params_;
  std::vector<double> adapted;
  std::span<const double> input = p;
  if (params.adapter) {
    std::vector<double> hidden(params.adapter->prompt.width);
    adapted.resize(p.size());
    internal::AdaptPrompt(params.adapter->prompt, p, hidden, adapted);
    input = adapted;
  }
  bool need_core = false;
  bool need_head = false;
  for (size_t idx : indices) {
    (slots_[idx].adapted_head ? need_head : need_core) = true;
  }
  std::vector<double> core_pp;
  std::vector<double> head_pp;
  if (need_core) {
    core_pp.resize(params.hidden());
    internal::PromptProjection(params.predictor, input, core_pp);
  }
  if (need_head) {
    head_pp.resize(params.adapter->head.hidden);
    internal::PromptProjection(params.adapter->head, input, head_pp);
  }
  for (size_t k = 0; k < indices.size(); ++k) {
    const Slot& slot = slots_[indices[k]];
    const double* pp = slot.adapted_head ? head_pp.data() : core_pp.data();
    out[k] = Sigmoid(internal::Logit(*slot.net, pp, slot.identity_bias.data()));
  }
}

void QualityEstimator::CheckEmbedding(const PromptEmbedding& embedding) const {
  CheckPromptDim(*params_, embedding);
}

QualityEstimates QualityEstimator::PredictAll(
    const PromptEmbedding& embedding, std::span<const std::string> candidate_ids) const {
  if (candidate_ids.empty()) ThrowInvalidArgument("empty candidate set");
  CheckEmbedding(embedding);
  std::vector<size_t> indices;
  indices.reserve(candidate_ids.size());
  for (const std::string& id : candidate_ids) indices.push_back(IndexOf(id));
  QualityEstimates out;
  out.prompt_id = embedding.prompt_id;
  out.estimator_version = version_;
  out.candidate_ids.assign(candidate_ids.begin(), candidate_ids.end());
  out.values.resize(indices.size());
  ScoreIndices(embedding.values, indices, out.values);
  return out;
}

}  // namespace qroute

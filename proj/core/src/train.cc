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
#include <cmath>
#include <numeric>

#include "nn.h"
#include "qroute/error.h"
#include "qroute/estimator.h"
#include "qroute/util.h"

namespace qroute {

std::vector<std::span<double>> CoreTensors(EstimatorParameters& params) {
  PredictorParameters& net = params.predictor;
  std::vector<std::span<double>> out = {net.w1, net.b1, net.w2,
                                        std::span<double>(&net.b2, 1)};
  for (IdentityEmbedding& e : params.identities) out.emplace_back(e.values);
  return out;
}

double LossAndGradient(const EstimatorParameters& params,
                       std::span<const EncodedSample> samples, LossKind kind,
                       const LossConfig& config, EstimatorParameters* gradient) {
  if (params.adapter) {
    ThrowFailedPrecondition("core gradients are undefined once an adapter is attached");
  }
  if (samples.empty()) ThrowInvalidArgument("empty batch");
  const PredictorParameters& net = params.predictor;
  const size_t h = static_cast<size_t>(net.hidden);
  const size_t d = static_cast<size_t>(net.input_dim);
  const size_t d_id = static_cast<size_t>(net.identity_dim);
  const size_t stride = d + d_id;
  const size_t n_cand = params.identities.size();

  std::vector<std::vector<double>> bias(n_cand, std::vector<double>(h));
  for (size_t c = 0; c < n_cand; ++c) {
    internal::IdentityBias(net, params.identities[c].values, bias[c]);
  }

  if (gradient != nullptr) {
    *gradient = params;
    gradient->predictor = internal::ZerosLike(net);
    for (IdentityEmbedding& e : gradient->identities) {
      std::fill(e.values.begin(), e.values.end(), 0.0);
    }
  }
  const double inv_b = 1.0 / static_cast<double>(samples.size());
  std::vector<double> pp(h);
  std::vector<double> z(n_cand * h);
  std::vector<double> preds(n_cand);
  std::vector<double> g_sum(h);
  std::vector<std::vector<double>> g_cand(n_cand, std::vector<double>(h, 0.0));
  double total = 0.0;

  for (const EncodedSample& sample : samples) {
    if (sample.prompt.size() != d || sample.labels.size() != n_cand) {
      ThrowInvalidArgument("sample shape does not match estimator");
    }
    internal::PromptProjection(net, sample.prompt, pp);
    for (size_t c = 0; c < n_cand; ++c) {
      double* zc = z.data() + c * h;
      for (size_t j = 0; j < h; ++j) zc[j] = pp[j] + bias[c][j];
      preds[c] = Sigmoid(internal::Logit(net, pp.data(), bias[c].data()));
    }
    const LossResult loss = ComputeLoss(kind, preds, sample.labels, config);
    total += loss.value;
    if (gradient == nullptr) continue;

    PredictorParameters& g = gradient->predictor;
    std::fill(g_sum.begin(), g_sum.end(), 0.0);
    for (size_t c = 0; c < n_cand; ++c) {
      const double ds = loss.gradient[c] * inv_b * preds[c] * (1.0 - preds[c]);
      if (ds == 0.0) continue;
      g.b2 += ds;
      const double* zc = z.data() + c * h;
      for (size_t j = 0; j < h; ++j) {
        if (zc[j] <= 0.0) continue;
        g.w2[j] += ds * zc[j];
        const double dz = ds * net.w2[j];
        g_sum[j] += dz;
        g_cand[c][j] += dz;
      }
    }
    for (size_t j = 0; j < h; ++j) {
      if (g_sum[j] == 0.0) continue;
      double* row = g.w1.data() + j * stride;
      for (size_t i = 0; i < d; ++i) row[i] += g_sum[j] * sample.prompt[i];
    }
  }

  if (gradient != nullptr) {
    PredictorParameters& g = gradient->predictor;
    for (size_t c = 0; c < n_cand; ++c) {
      const std::vector<double>& e = params.identities[c].values;
      std::vector<double>& de = gradient->identities[c].values;
      for (size_t j = 0; j < h; ++j) {
        const double gj = g_cand[c][j];
        if (gj == 0.0) continue;
        g.b1[j] += gj;
        double* grow = g.w1.data() + j * stride + d;
        const double* wrow = net.w1.data() + j * stride + d;
        for (size_t k = 0; k < d_id; ++k) {
          grow[k] += gj * e[k];
          de[k] += gj * wrow[k];
        }
      }
    }
  }
  return total * inv_b;
}

double GradientCheck(const EstimatorParameters& params, const EncodedSample& sample,
                     LossKind kind, const LossConfig& config, double epsilon) {
  if (!(epsilon > 0.0)) ThrowInvalidArgument("epsilon must be > 0");
  const std::span<const EncodedSample> batch(&sample, 1);
  EstimatorParameters analytic;
  LossAndGradient(params, batch, kind, config, &analytic);
  EstimatorParameters probe = params;
  std::vector<std::span<double>> theta = CoreTensors(probe);
  std::vector<std::span<double>> grad = CoreTensors(analytic);
  double worst = 0.0;
  for (size_t t = 0; t < theta.size(); ++t) {
    for (size_t i = 0; i < theta[t].size(); ++i) {
      const double saved = theta[t][i];
      theta[t][i] = saved + epsilon;
      const double up = LossAndGradient(probe, batch, kind, config, nullptr);
      theta[t][i] = saved - epsilon;
      const double down = LossAndGradient(probe, batch, kind, config, nullptr);
      theta[t][i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = grad[t][i];
      const double rel =
          std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

namespace {

std::vector<std::string> ResolveTrainCandidates(const DatasetSplit& split,
                                                const Registry& registry,
                                                const TrainConfig& config) {
  const std::string& family = split.family();
  std::vector<std::string> ids =
      config.candidates.empty() ? registry.IdsOfFamily(family) : config.candidates;
  if (ids.empty()) ThrowInvalidArgument("family '" + family + "' has no candidates");
  for (const std::string& id : ids) {
    const ModelCandidate& c = registry.Get(id);
    if (c.family != family) {
      ThrowInvalidArgument("candidate '" + id + "' is not in family '" + family + "'");
    }
  }
  return ids;
}

std::vector<EncodedSample> EncodeSplit(const DatasetSplit& split, const Encoder& encoder,
                                       std::span<const std::string> ids) {
  std::vector<EncodedSample> out;
  out.reserve(split.size());
  for (const PromptRecord& r : split.records) {
    EncodedSample s;
    s.prompt = encoder.Encode(r.id, r.prompt).values;
    for (const std::string& id : ids) s.labels.push_back(r.Label(id).reward);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TrainResult Train(const DatasetSplit& train, const Registry& registry,
                  const Encoder& encoder, const TrainConfig& config,
                  const DatasetSplit* dev) {
  if (train.empty()) ThrowInvalidArgument("training split is empty");
  if (!(config.learning_rate > 0.0)) ThrowInvalidArgument("learning rate must be > 0");
  if (config.loss_config.margin < 0.0) ThrowInvalidArgument("hinge margin must be >= 0");
  if (config.batch_size < 1) ThrowInvalidArgument("batch size must be >= 1");
  if (config.epochs < 0) ThrowInvalidArgument("epochs must be >= 0");
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    ThrowInvalidArgument("momentum must be in [0, 1)");
  }

  const std::vector<std::string> ids = ResolveTrainCandidates(train, registry, config);
  TrainResult result;
  result.params = InitParameters(train.family(), encoder.spec(), ids, config.hidden,
                                 config.identity_dim, config.seed);
  result.params.encoder_id = encoder.id();
  result.params.metadata.loss = config.loss;
  const std::vector<EncodedSample> samples = EncodeSplit(train, encoder, ids);

  Rng rng(Mix64(config.seed ^ 0x747261696eULL));
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  internal::Sgd sgd(config.learning_rate, config.momentum);
  std::vector<EncodedSample> batch;
  EstimatorParameters grad;
  int64_t step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (size_t k = start; k < end; ++k) batch.push_back(samples[order[k]]);
      ++step;
      const double loss =
          LossAndGradient(result.params, batch, config.loss, config.loss_config, &grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kInternal,
                    "non-finite training loss at step " + std::to_string(step));
      }
      epoch_loss += loss * static_cast<double>(end - start);
      sgd.Step(CoreTensors(result.params), CoreTensors(grad));
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / static_cast<double>(samples.size());
    if (dev != nullptr && !dev->empty() && config.validation_every > 0 &&
        (epoch % config.validation_every == 0 || epoch == config.epochs)) {
      QualityEstimator estimator(std::make_shared<const EstimatorParameters>(result.params));
      log.dev_mae = DatasetMae(estimator, encoder, *dev);
    }
    result.log.epochs.push_back(log);
  }
  result.log.steps = step;
  result.params.metadata.steps = step;
  result.params.metadata.epochs = config.epochs;
  return result;
}

double DatasetMae(const QualityEstimator& estimator, const Encoder& encoder,
                  const DatasetSplit& split) {
  if (split.empty()) ThrowInvalidArgument("mae: empty split");
  const std::vector<std::string>& ids = estimator.candidate_ids();
  std::vector<size_t> indices(ids.size());
  std::iota(indices.begin(), indices.end(), 0);
  std::vector<double> preds(ids.size());
  std::vector<double> errors;
  errors.reserve(split.size() * ids.size());
  for (const PromptRecord& r : split.records) {
    const PromptEmbedding p = encoder.Encode(r.id, r.prompt);
    estimator.ScoreIndices(p.values, indices, preds);
    for (size_t c = 0; c < ids.size(); ++c) {
      errors.push_back(std::abs(preds[c] - r.Label(ids[c]).reward));
    }
  }
  return PairwiseMean(errors);
}

}  // namespace qroute

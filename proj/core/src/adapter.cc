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

#include "nn.h"
#include "qroute/error.h"
#include "qroute/estimator.h"
#include "qroute/util.h"

namespace qroute {

std::vector<std::span<double>> AdapterTensors(AdapterBlock& block) {
  return {block.prompt.wa,      block.prompt.ba, block.prompt.wb,
          block.prompt.bb,      block.lie.a,     block.lie.c,
          block.identity.values, block.head.w1,  block.head.b1,
          block.head.w2,        std::span<double>(&block.head.b2, 1)};
}

AdapterBlock InitAdapter(const EstimatorParameters& frozen, std::string new_candidate,
                         const AdapterConfig& config) {
  if (frozen.adapter) {
    ThrowFailedPrecondition("estimator already carries an adapter for '" +
                            frozen.adapter->identity.candidate_id + "'");
  }
  if (frozen.HasCandidate(new_candidate)) {
    throw Error(ErrorCode::kAlreadyExists,
                "candidate '" + new_candidate + "' is already scored by the estimator");
  }
  if (config.width < 1 || config.head_hidden < 1) {
    ThrowInvalidArgument("adapter widths must be >= 1");
  }
  const int d = frozen.input_dim();
  const int d_id = frozen.identity_dim();
  Rng rng(Mix64(config.seed ^ 0x6164617074ULL));
  AdapterBlock block;
  block.identity.candidate_id = std::move(new_candidate);
  block.prompt.width = config.width;
  block.prompt.wa.resize(static_cast<size_t>(config.width) * d);
  internal::FillUniform(rng, block.prompt.wa, internal::GlorotBound(d, config.width));
  block.prompt.ba.assign(config.width, 0.0);
  block.prompt.wb.assign(static_cast<size_t>(d) * config.width, 0.0);
  block.prompt.bb.assign(d, 0.0);
  block.lie.a.assign(static_cast<size_t>(d_id) * d_id, 0.0);
  for (int i = 0; i < d_id; ++i) block.lie.a[static_cast<size_t>(i) * d_id + i] = 1.0;
  block.lie.c.assign(d_id, 0.0);
  block.identity.values.resize(d_id);
  for (double& v : block.identity.values) v = rng.Normal(0.0, 0.01);
  block.head = internal::GlorotPredictor(rng, d, d_id, config.head_hidden);
  block.consistency_weight = config.consistency_weight;
  return block;
}

double AdapterLossAndGradient(const EstimatorParameters& params,
                              std::span<const AdapterSample> samples, double lambda,
                              AdapterBlock* gradient) {
  if (!params.adapter) ThrowFailedPrecondition("estimator has no adapter");
  if (samples.empty()) ThrowInvalidArgument("empty batch");
  const AdapterBlock& ad = *params.adapter;
  const PredictorParameters& core = params.predictor;
  const PredictorParameters& head = ad.head;
  const size_t d = static_cast<size_t>(params.input_dim());
  const size_t d_id = static_cast<size_t>(params.identity_dim());
  const size_t w = static_cast<size_t>(ad.prompt.width);
  const size_t n_core = params.identities.size();
  const size_t core_stride = d + d_id;
  const size_t head_stride = d + d_id;

  // Adapted identities and their bias terms for this step.
  std::vector<std::vector<double>> e_adapted(n_core + 1, std::vector<double>(d_id));
  std::vector<std::vector<double>> bias(n_core + 1);
  for (size_t c = 0; c < n_core; ++c) {
    internal::AdaptIdentity(ad.lie, params.identities[c].values, e_adapted[c]);
    bias[c].resize(core.hidden);
    internal::IdentityBias(core, e_adapted[c], bias[c]);
  }
  internal::AdaptIdentity(ad.lie, ad.identity.values, e_adapted[n_core]);
  bias[n_core].resize(head.hidden);
  internal::IdentityBias(head, e_adapted[n_core], bias[n_core]);

  if (gradient != nullptr) {
    *gradient = ad;
    for (std::span<double> t : AdapterTensors(*gradient)) std::fill(t.begin(), t.end(), 0.0);
  }
  const double inv_b = 1.0 / static_cast<double>(samples.size());
  std::vector<double> u_pre(w);
  std::vector<double> p_adapted(d);
  std::vector<double> pp_core(core.hidden);
  std::vector<double> pp_head(head.hidden);
  std::vector<double> dz_sum(std::max(core.hidden, head.hidden));
  std::vector<double> dp(d);
  std::vector<double> du(w);
  std::vector<std::vector<double>> g_cand(n_core + 1);
  for (size_t c = 0; c < n_core; ++c) g_cand[c].assign(core.hidden, 0.0);
  g_cand[n_core].assign(head.hidden, 0.0);
  double total = 0.0;

  for (const AdapterSample& s : samples) {
    if (s.prompt.size() != d) ThrowInvalidArgument("adapter sample has wrong dimension");
    internal::AdaptPrompt(ad.prompt, s.prompt, u_pre, p_adapted);
    std::fill(dp.begin(), dp.end(), 0.0);
    bool any = false;

    // Scores one network on p' and accumulates dL/dz into dz_sum and g.
    auto score = [&](const PredictorParameters& net, const std::vector<double>& pp,
                     const std::vector<double>& b, double target, double weight,
                     std::vector<double>& g, PredictorParameters* gnet) {
      const double r = Sigmoid(internal::Logit(net, pp.data(), b.data()));
      const double diff = r - target;
      total += weight * diff * diff;
      if (gradient == nullptr) return;
      const double ds = weight * 2.0 * diff * inv_b * r * (1.0 - r);
      if (ds == 0.0) return;
      if (gnet != nullptr) gnet->b2 += ds;
      for (int j = 0; j < net.hidden; ++j) {
        const double zj = pp[j] + b[j];
        if (zj <= 0.0) continue;
        if (gnet != nullptr) gnet->w2[j] += ds * zj;
        const double dz = ds * net.w2[j];
        dz_sum[j] += dz;
        g[j] += dz;
        any = true;
      }
    };

    std::fill(dz_sum.begin(), dz_sum.end(), 0.0);
    if (s.is_new) {
      if (s.targets.size() != 1) ThrowInvalidArgument("new sample needs one target");
      internal::PromptProjection(head, p_adapted, pp_head);
      score(head, pp_head, bias[n_core], s.targets[0], 1.0, g_cand[n_core],
            gradient ? &gradient->head : nullptr);
      if (gradient != nullptr) {
        for (int j = 0; j < head.hidden; ++j) {
          if (dz_sum[j] == 0.0) continue;
          double* grow = gradient->head.w1.data() + j * head_stride;
          const double* wrow = head.w1.data() + j * head_stride;
          for (size_t i = 0; i < d; ++i) {
            grow[i] += dz_sum[j] * p_adapted[i];
            dp[i] += dz_sum[j] * wrow[i];
          }
        }
      }
    } else {
      if (s.targets.size() != n_core) {
        ThrowInvalidArgument("old sample needs one target per core candidate");
      }
      internal::PromptProjection(core, p_adapted, pp_core);
      for (size_t c = 0; c < n_core; ++c) {
        score(core, pp_core, bias[c], s.targets[c], lambda, g_cand[c], nullptr);
      }
      if (gradient != nullptr) {
        for (int j = 0; j < core.hidden; ++j) {
          if (dz_sum[j] == 0.0) continue;
          const double* wrow = core.w1.data() + j * core_stride;
          for (size_t i = 0; i < d; ++i) dp[i] += dz_sum[j] * wrow[i];
        }
      }
    }
    if (gradient == nullptr || !any) continue;

    // Back through p' = p + Wb relu(Wa p + ba) + bb.
    PromptAdapter& gp = gradient->prompt;
    std::fill(du.begin(), du.end(), 0.0);
    for (size_t i = 0; i < d; ++i) {
      if (dp[i] == 0.0) continue;
      gp.bb[i] += dp[i];
      double* grow = gp.wb.data() + i * w;
      const double* wrow = ad.prompt.wb.data() + i * w;
      for (size_t k = 0; k < w; ++k) {
        if (u_pre[k] <= 0.0) continue;
        grow[k] += dp[i] * u_pre[k];
        du[k] += dp[i] * wrow[k];
      }
    }
    for (size_t k = 0; k < w; ++k) {
      if (du[k] == 0.0) continue;
      gp.ba[k] += du[k];
      double* grow = gp.wa.data() + k * d;
      for (size_t i = 0; i < d; ++i) grow[i] += du[k] * s.prompt[i];
    }
  }

  if (gradient != nullptr) {
    // Back through the identity path; only the head's tensors are trainable.
    std::vector<double> de(d_id);
    for (size_t c = 0; c <= n_core; ++c) {
      const bool is_new = c == n_core;
      const PredictorParameters& net = is_new ? head : core;
      const size_t stride = is_new ? head_stride : core_stride;
      std::fill(de.begin(), de.end(), 0.0);
      for (int j = 0; j < net.hidden; ++j) {
        const double gj = g_cand[c][j];
        if (gj == 0.0) continue;
        const double* wrow = net.w1.data() + j * stride + d;
        for (size_t k = 0; k < d_id; ++k) de[k] += gj * wrow[k];
        if (is_new) {
          gradient->head.b1[j] += gj;
          double* grow = gradient->head.w1.data() + j * stride + d;
          for (size_t k = 0; k < d_id; ++k) grow[k] += gj * e_adapted[c][k];
        }
      }
      const std::vector<double>& e_raw =
          is_new ? ad.identity.values : params.identities[c].values;
      for (size_t r = 0; r < d_id; ++r) {
        if (de[r] == 0.0) continue;
        gradient->lie.c[r] += de[r];
        double* grow = gradient->lie.a.data() + r * d_id;
        for (size_t k = 0; k < d_id; ++k) grow[k] += de[r] * e_raw[k];
      }
      if (is_new) {
        for (size_t k = 0; k < d_id; ++k) {
          double acc = 0.0;
          for (size_t r = 0; r < d_id; ++r) acc += ad.lie.a[r * d_id + k] * de[r];
          gradient->identity.values[k] += acc;
        }
      }
    }
  }
  return total * inv_b;
}

EstimatorParameters ExtendWithAdapter(const EstimatorParameters& frozen,
                                      const std::string& new_candidate,
                                      const DatasetSplit& new_data,
                                      const DatasetSplit& old_data, const Encoder& encoder,
                                      const AdapterConfig& config) {
  if (new_data.empty()) ThrowInvalidArgument("adapter training needs new-candidate data");
  if (!(config.new_fraction > 0.0) || !(config.old_fraction > 0.0) ||
      std::abs(config.new_fraction + config.old_fraction - 1.0) > 1e-9) {
    ThrowInvalidArgument("adapter mixture fractions must be positive and sum to 1");
  }
  if (config.consistency_weight < 0.0) {
    ThrowInvalidArgument("consistency weight must be >= 0");
  }
  if (old_data.empty()) ThrowInvalidArgument("adapter training needs old-candidate data");
  if (config.steps < 0 || config.batch_size < 2) {
    ThrowInvalidArgument("adapter steps must be >= 0 and batch size >= 2");
  }
  if (!(config.learning_rate > 0.0)) ThrowInvalidArgument("learning rate must be > 0");
  if (encoder.dim() != frozen.input_dim()) {
    ThrowInvalidArgument("encoder dimension does not match the frozen estimator");
  }

  EstimatorParameters params = frozen;
  params.adapter = InitAdapter(frozen, new_candidate, config);

  std::vector<AdapterSample> fresh;
  fresh.reserve(new_data.size());
  for (const PromptRecord& r : new_data.records) {
    AdapterSample s;
    s.prompt = encoder.Encode(r.id, r.prompt).values;
    s.targets = {r.Label(new_candidate).reward};
    s.is_new = true;
    fresh.push_back(std::move(s));
  }
  QualityEstimator frozen_estimator(std::make_shared<const EstimatorParameters>(frozen));
  std::vector<size_t> all(frozen.identities.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<AdapterSample> old;
  old.reserve(old_data.size());
  for (const PromptRecord& r : old_data.records) {
    AdapterSample s;
    s.prompt = encoder.Encode(r.id, r.prompt).values;
    s.targets.resize(all.size());
    frozen_estimator.ScoreIndices(s.prompt, all, s.targets);
    old.push_back(std::move(s));
  }

  const int n_new = std::clamp(
      static_cast<int>(std::lround(config.batch_size * config.new_fraction)), 1,
      config.batch_size - 1);
  const int n_old = config.batch_size - n_new;
  Rng rng(Mix64(config.seed ^ 0x6d6978ULL));
  internal::Sgd sgd(config.learning_rate, config.momentum);
  std::vector<AdapterSample> batch;
  AdapterBlock grad;
  for (int step = 1; step <= config.steps; ++step) {
    batch.clear();
    for (int k = 0; k < n_new; ++k) batch.push_back(fresh[rng.Below(fresh.size())]);
    for (int k = 0; k < n_old; ++k) batch.push_back(old[rng.Below(old.size())]);
    const double loss =
        AdapterLossAndGradient(params, batch, config.consistency_weight, &grad);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kInternal,
                  "non-finite adapter loss at step " + std::to_string(step));
    }
    sgd.Step(AdapterTensors(*params.adapter), AdapterTensors(grad));
  }
  params.adapter->steps = config.steps;
  return params;
}

}  // namespace qroute

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
#include <memory>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "qroute/error.h"
#include "test_support.h"

namespace qroute {
namespace {

// Straight-line sigma(W2 relu(W1 [p; e] + b1) + b2) on the full
// concatenation.
double ReferenceForward(const PredictorParameters& net, const std::vector<double>& p,
                        const std::vector<double>& e) {
  std::vector<double> x = p;
  x.insert(x.end(), e.begin(), e.end());
  const size_t cols = x.size();
  double logit = net.b2;
  for (int j = 0; j < net.hidden; ++j) {
    double z = net.b1[j];
    for (size_t k = 0; k < cols; ++k) z += net.w1[j * cols + k] * x[k];
    logit += net.w2[j] * std::max(0.0, z);
  }
  return 1.0 / (1.0 + std::exp(-logit));
}

PromptEmbedding RandomEmbedding(Rng& rng, int dim, const std::string& encoder_id) {
  PromptEmbedding e;
  e.prompt_id = "p";
  e.encoder_id = encoder_id;
  for (int i = 0; i < dim; ++i) e.values.push_back(rng.Normal());
  return e;
}

EstimatorParameters SmallParams(uint64_t seed, int dim = 12, int hidden = 9, int id_dim = 5) {
  EncoderSpec spec;
  spec.dim = dim;
  const std::vector<std::string> ids = DefaultRegistry().IdsOfFamily("llama");
  EstimatorParameters params = InitParameters("llama", spec, ids, hidden, id_dim, seed);
  Rng rng(seed + 100);
  for (double& b : params.predictor.b1) b = rng.Normal(0.0, 0.3);
  params.predictor.b2 = rng.Normal(0.0, 0.3);
  for (IdentityEmbedding& id : params.identities) {
    for (double& v : id.values) v = rng.Normal(0.0, 0.5);
  }
  return params;
}

TEST(PredictTest, ZeroParametersGiveOneHalf) {
  EstimatorParameters params = SmallParams(1);
  std::fill(params.predictor.w1.begin(), params.predictor.w1.end(), 0.0);
  std::fill(params.predictor.b1.begin(), params.predictor.b1.end(), 0.0);
  std::fill(params.predictor.w2.begin(), params.predictor.w2.end(), 0.0);
  params.predictor.b2 = 0.0;
  Rng rng(2);
  const PromptEmbedding e = RandomEmbedding(rng, 12, params.encoder_id);
  for (const std::string& id : params.CandidateIds()) EXPECT_EQ(Predict(params, e, id), 0.5);
}

TEST(PredictTest, HandSetNetworkWithZeroLogit) {
  PredictorParameters net;
  net.input_dim = 1;
  net.identity_dim = 1;
  net.hidden = 2;
  net.w1 = {1.0, 0.0, 0.0, 2.0};  // z = (p, 2e)
  net.b1 = {0.0, -1.0};
  net.w2 = {1.0, -1.0};
  net.b2 = -0.5;
  // p = 0.5, e = 0.5: z = (0.5, 0); logit = 0.5 - 0 - 0.5 = 0.
  const std::vector<double> p = {0.5}, e = {0.5};
  EXPECT_EQ(ForwardPredictor(net, p, e), 0.5);
}

TEST(PredictTest, MatchesReferenceImplementation) {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    const EstimatorParameters params = SmallParams(seed);
    Rng rng(seed);
    const PromptEmbedding e = RandomEmbedding(rng, 12, params.encoder_id);
    for (const IdentityEmbedding& id : params.identities) {
      const double expected = ReferenceForward(params.predictor, e.values, id.values);
      EXPECT_NEAR(Predict(params, e, id.candidate_id), expected, 1e-12);
    }
  }
}

TEST(PredictTest, OutputsLieStrictlyInsideUnitInterval) {
  const EstimatorParameters params = SmallParams(3);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const PromptEmbedding e = RandomEmbedding(rng, 12, params.encoder_id);
    const QualityEstimates q = PredictAll(params, e, params.CandidateIds());
    for (double v : q.values) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(PredictTest, ErrorsOnUnknownCandidateAndWrongDimension) {
  const EstimatorParameters params = SmallParams(4);
  Rng rng(4);
  const PromptEmbedding e = RandomEmbedding(rng, 12, params.encoder_id);
  EXPECT_THROW(Predict(params, e, "nova-pro"), Error);
  const PromptEmbedding wrong = RandomEmbedding(rng, 11, params.encoder_id);
  EXPECT_THROW(Predict(params, wrong, "llama-3.1-8b"), Error);
  const std::vector<std::string> none;
  EXPECT_THROW(PredictAll(params, e, none), Error);
}

TEST(PredictAllTest, ElementwiseEqualsPredictAndIsDeterministic) {
  const EstimatorParameters params = SmallParams(5);
  Rng rng(5);
  const PromptEmbedding e = RandomEmbedding(rng, 12, params.encoder_id);
  const std::vector<std::string> ids = params.CandidateIds();
  ASSERT_EQ(ids.size(), 5u);
  const QualityEstimates q = PredictAll(params, e, ids);
  ASSERT_EQ(q.values.size(), 5u);
  for (size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(q.values[i], Predict(params, e, ids[i]));
    EXPECT_EQ(q.Get(ids[i]), q.values[i]);
  }
  EXPECT_EQ(PredictAll(params, e, ids).values, q.values);
  EXPECT_EQ(q.estimator_version, EstimatorVersion(params));
  EXPECT_THROW(q.Get("nova-pro"), Error);
}

TEST(PredictAllTest, PermutationEquivariant) {
  const EstimatorParameters params = SmallParams(6);
  Rng rng(6);
  const PromptEmbedding e = RandomEmbedding(rng, 12, params.encoder_id);
  std::vector<std::string> ids = params.CandidateIds();
  const QualityEstimates base = PredictAll(params, e, ids);
  for (int trial = 0; trial < 10; ++trial) {
    rng.Shuffle(ids);
    const QualityEstimates q = PredictAll(params, e, ids);
    for (size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(q.values[i], base.Get(ids[i]));
  }
}

TEST(QualityEstimatorTest, BitIdenticalToPredict) {
  auto params = std::make_shared<const EstimatorParameters>(SmallParams(7));
  const QualityEstimator est(params);
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const PromptEmbedding e = RandomEmbedding(rng, 12, params->encoder_id);
    const QualityEstimates q = est.PredictAll(e, params->CandidateIds());
    for (size_t c = 0; c < q.values.size(); ++c) {
      EXPECT_EQ(q.values[c], Predict(*params, e, q.candidate_ids[c]));
    }
  }
  EXPECT_EQ(est.version(), EstimatorVersion(*params));
  EXPECT_EQ(est.IndexOf("llama-3.1-8b"), 4u);
  EXPECT_THROW(est.IndexOf("nope"), Error);
}

TEST(QualityEstimatorTest, RejectsEmbeddingFromAnotherEncoder) {
  auto params = std::make_shared<const EstimatorParameters>(SmallParams(8));
  const QualityEstimator est(params);
  Rng rng(8);
  const PromptEmbedding e = RandomEmbedding(rng, 12, "hashed-ngram/v1/d=12/seed=other");
  EXPECT_THROW(est.PredictAll(e, params->CandidateIds()), Error);
}

TEST(EstimatorVersionTest, ChangesWithAnyTensor) {
  EstimatorParameters params = SmallParams(9);
  const std::string v = EstimatorVersion(params);
  EXPECT_EQ(EstimatorVersion(params), v);
  params.predictor.b2 += 1e-15;
  EXPECT_NE(EstimatorVersion(params), v);
  EXPECT_EQ(v.rfind("llama-", 0), 0u);
}

TEST(InitParametersTest, ShapesAndGlorotBounds) {
  EncoderSpec spec;
  spec.dim = 20;
  const std::vector<std::string> ids = {"a", "b"};
  const EstimatorParameters p = InitParameters("f", spec, ids, 7, 4, 1);
  EXPECT_EQ(p.predictor.w1.size(), 7u * 24u);
  EXPECT_EQ(p.predictor.b1, std::vector<double>(7, 0.0));
  EXPECT_EQ(p.predictor.w2.size(), 7u);
  const double bound1 = std::sqrt(6.0 / (24 + 7));
  for (double w : p.predictor.w1) EXPECT_LE(std::abs(w), bound1);
  const double bound2 = std::sqrt(6.0 / (7 + 1));
  for (double w : p.predictor.w2) EXPECT_LE(std::abs(w), bound2);
  ASSERT_EQ(p.identities.size(), 2u);
  EXPECT_EQ(p.identities[1].values.size(), 4u);
  const std::vector<std::string> dup = {"a", "a"};
  EXPECT_THROW(InitParameters("f", spec, dup, 7, 4, 1), Error);
  EXPECT_EQ(InitParameters("f", spec, ids, 7, 4, 1), p);
}

// ---------------------------------------------------------------------------

TEST(LossTest, MseIdentityAndArithmetic) {
  const std::vector<double> y = {0.2, 0.7, 0.4};
  const LossResult zero = ComputeLoss(LossKind::kMse, y, y);
  EXPECT_EQ(zero.value, 0.0);
  for (double g : zero.gradient) EXPECT_EQ(g, 0.0);
  const std::vector<double> p = {0.5, 0.5}, l = {0.0, 1.0};
  const LossResult r = ComputeLoss(LossKind::kMse, p, l);
  EXPECT_DOUBLE_EQ(r.value, 0.25);
  EXPECT_DOUBLE_EQ(r.gradient[0], 0.5);
  EXPECT_DOUBLE_EQ(r.gradient[1], -0.5);
}

TEST(LossTest, HingeSatisfiedPairIsZero) {
  LossConfig config;
  config.margin = 0.1;
  const std::vector<double> p = {0.9, 0.1}, l = {1.0, 0.0};
  const LossResult r = ComputeLoss(LossKind::kHinge, p, l, config);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.gradient, (std::vector<double>{0.0, 0.0}));
}

TEST(LossTest, HingeMatchesPairEnumeration) {
  LossConfig config;
  config.margin = 0.2;
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 2 + rng.Below(5);
    std::vector<double> p(n), l(n);
    for (size_t i = 0; i < n; ++i) {
      p[i] = rng.Uniform();
      l[i] = std::round(rng.Uniform() * 4) / 4;
    }
    double sum = 0.0;
    int pairs = 0;
    for (size_t a = 0; a < n; ++a) {
      for (size_t b = 0; b < n; ++b) {
        if (l[a] > l[b]) {
          sum += std::max(0.0, config.margin - (p[a] - p[b]));
          ++pairs;
        }
      }
    }
    const double expected = pairs == 0 ? 0.0 : sum / pairs;
    EXPECT_NEAR(ComputeLoss(LossKind::kHinge, p, l, config).value, expected, 1e-14);
  }
}

TEST(LossTest, HingeWithEqualLabelsHasNoPairs) {
  const std::vector<double> p = {0.1, 0.9, 0.3}, l = {0.5, 0.5, 0.5};
  const LossResult r = ComputeLoss(LossKind::kHinge, p, l);
  EXPECT_EQ(r.value, 0.0);
  for (double g : r.gradient) EXPECT_EQ(g, 0.0);
}

TEST(LossTest, ListNetMinimumIsLabelEntropy) {
  Rng rng(2);
  for (double t : {0.05, 0.5, 2.0}) {
    LossConfig config;
    config.temperature = t;
    std::vector<double> l(6);
    for (double& v : l) v = rng.Uniform();
    double mx = *std::max_element(l.begin(), l.end());
    double z = 0.0;
    for (double v : l) z += std::exp((v - mx) / t);
    double entropy = 0.0;
    for (double v : l) {
      const double q = std::exp((v - mx) / t) / z;
      entropy -= q * std::log(q);
    }
    const LossResult r = ComputeLoss(LossKind::kListNet, l, l, config);
    EXPECT_NEAR(r.value, entropy, 1e-12) << t;
    for (double g : r.gradient) EXPECT_NEAR(g, 0.0, 1e-12);
  }
}

TEST(LossTest, ValidatesInputs) {
  const std::vector<double> a = {0.1, 0.2}, b = {0.1};
  EXPECT_THROW(ComputeLoss(LossKind::kMse, a, b), Error);
  const std::vector<double> empty;
  EXPECT_THROW(ComputeLoss(LossKind::kMse, empty, empty), Error);
  const std::vector<double> bad = {0.1, 1.5};
  EXPECT_THROW(ComputeLoss(LossKind::kMse, a, bad), Error);
  LossConfig config;
  config.temperature = 0.0;
  EXPECT_THROW(ComputeLoss(LossKind::kListNet, a, a, config), Error);
}

TEST(LossTest, AnalyticGradientsMatchFiniteDifferences) {
  Rng rng(3);
  for (LossKind kind : {LossKind::kMse, LossKind::kHinge, LossKind::kListNet}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> p(4), l(4);
      for (size_t i = 0; i < 4; ++i) {
        p[i] = rng.Uniform();
        l[i] = rng.Uniform();
      }
      LossConfig config;
      config.temperature = 0.3;
      const LossResult r = ComputeLoss(kind, p, l, config);
      for (size_t i = 0; i < 4; ++i) {
        const double h = 1e-6;
        std::vector<double> up = p, down = p;
        up[i] += h;
        down[i] -= h;
        const double fd = (ComputeLoss(kind, up, l, config).value -
                           ComputeLoss(kind, down, l, config).value) / (2 * h);
        EXPECT_NEAR(r.gradient[i], fd, 1e-6) << LossKindName(kind);
      }
    }
  }
}

TEST(LossTest, NamesRoundTrip) {
  for (LossKind kind : {LossKind::kMse, LossKind::kHinge, LossKind::kListNet}) {
    EXPECT_EQ(ParseLossKind(LossKindName(kind)), kind);
  }
  EXPECT_THROW(ParseLossKind("ranknet"), Error);
}

}  // namespace
}  // namespace qroute

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


// Quality estimator: predicted reward r_hat(prompt, candidate) in (0, 1).
//
// One fusion network per family scores every candidate. The prompt
// embedding p (dimension d) is concatenated with a learned identity
// embedding e_c (dimension d_id) and passed through
//
//   z     = W1 [p; e_c] + b1          (h)
//   r_hat = sigmoid(W2 relu(z) + b2)
//
// W1 is stored row-major as h rows of (d + d_id) entries. The prompt part of
// each row is applied first and the identity part is folded into the bias,
// which lets a prompt be scored against many candidates for the cost of one
// h x d product.
//
// An estimator may also carry one adapter block that onboards a candidate
// without touching the trained tensors. With an adapter present, inputs are
// rewritten as
//
//   p'  = p + Wb relu(Wa p + ba) + bb
//   e'  = A e + c
//
// old candidates are scored by the frozen network on [p'; e'_c] and the new
// candidate by its own head on [p'; e'_new].

#ifndef QROUTE_ESTIMATOR_H_
#define QROUTE_ESTIMATOR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qroute/dataset.h"
#include "qroute/encoder.h"
#include "qroute/registry.h"

namespace qroute {

struct IdentityEmbedding {
  std::string candidate_id;
  std::vector<double> values;
  bool trainable = true;

  friend bool operator==(const IdentityEmbedding&, const IdentityEmbedding&) = default;
};

struct PredictorParameters {
  int input_dim = 0;     // d
  int identity_dim = 0;  // d_id
  int hidden = 0;        // h
  std::vector<double> w1;  // h x (d + d_id), row-major
  std::vector<double> b1;  // h
  std::vector<double> w2;  // h
  double b2 = 0.0;

  friend bool operator==(const PredictorParameters&, const PredictorParameters&) = default;
};

struct PromptAdapter {
  int width = 0;
  std::vector<double> wa;  // width x d
  std::vector<double> ba;  // width
  std::vector<double> wb;  // d x width
  std::vector<double> bb;  // d

  friend bool operator==(const PromptAdapter&, const PromptAdapter&) = default;
};

struct IdentityAdapter {
  std::vector<double> a;  // d_id x d_id
  std::vector<double> c;  // d_id

  friend bool operator==(const IdentityAdapter&, const IdentityAdapter&) = default;
};

struct AdapterBlock {
  IdentityEmbedding identity;  // the onboarded candidate
  PromptAdapter prompt;
  IdentityAdapter lie;
  PredictorParameters head;
  double consistency_weight = 0.0;
  int64_t steps = 0;

  friend bool operator==(const AdapterBlock&, const AdapterBlock&) = default;
};

enum class LossKind { kMse, kHinge, kListNet };

std::string_view LossKindName(LossKind kind);
LossKind ParseLossKind(std::string_view name);

struct TrainingMetadata {
  LossKind loss = LossKind::kMse;
  uint64_t seed = 0;
  int64_t steps = 0;
  int epochs = 0;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct EstimatorParameters {
  std::string family;
  EncoderSpec encoder_spec;
  std::string encoder_id;
  // Candidates scored by the core network, in training order.
  std::vector<IdentityEmbedding> identities;
  PredictorParameters predictor;
  TrainingMetadata metadata;
  std::optional<AdapterBlock> adapter;

  int input_dim() const { return predictor.input_dim; }
  int identity_dim() const { return predictor.identity_dim; }
  int hidden() const { return predictor.hidden; }

  // Core candidates followed by the adapter candidate, if any.
  std::vector<std::string> CandidateIds() const;
  bool HasCandidate(std::string_view id) const;

  friend bool operator==(const EstimatorParameters& a, const EstimatorParameters& b);
};

// Hex digest over every tensor and the candidate list.
std::string EstimatorVersion(const EstimatorParameters& params);

// Glorot-uniform weights, N(0, 0.01^2) identity embeddings, zero biases.
EstimatorParameters InitParameters(std::string family, const EncoderSpec& encoder_spec,
                                   std::span<const std::string> candidate_ids,
                                   int hidden, int identity_dim, uint64_t seed);

struct QualityEstimates {
  std::string prompt_id;
  std::vector<std::string> candidate_ids;  // request order
  std::vector<double> values;
  std::string estimator_version;

  // Throws kNotFound.
  double Get(std::string_view candidate_id) const;
};

// Single forward pass of a predictor on [p; e]. Exposed for tests and the
// adapter trainer.
double ForwardPredictor(const PredictorParameters& predictor, std::span<const double> p,
                        std::span<const double> e);

double Predict(const EstimatorParameters& params, const PromptEmbedding& embedding,
               std::string_view candidate_id);
QualityEstimates PredictAll(const EstimatorParameters& params,
                            const PromptEmbedding& embedding,
                            std::span<const std::string> candidate_ids);

// Serving form of an estimator. Identity projections are computed once at
// construction, so scoring a prompt costs one h x d product plus O(h) per
// candidate. Outputs are bit-identical to Predict. Immutable and safe to share
// across threads.
class QualityEstimator {
 public:
  explicit QualityEstimator(std::shared_ptr<const EstimatorParameters> params);

  const EstimatorParameters& params() const { return *params_; }
  const std::string& version() const { return version_; }
  const std::vector<std::string>& candidate_ids() const { return ids_; }
  size_t num_candidates() const { return ids_.size(); }
  // Throws kNotFound.
  size_t IndexOf(std::string_view candidate_id) const;

  // Scores the candidates at `indices` (into candidate_ids()).
  void ScoreIndices(std::span<const double> p, std::span<const size_t> indices,
                    std::span<double> out) const;
  QualityEstimates PredictAll(const PromptEmbedding& embedding,
                              std::span<const std::string> candidate_ids) const;

 private:
  struct Slot {
    const PredictorParameters* net;
    std::vector<double> identity_bias;  // b1 + W1_id e
    bool adapted_head;
  };
  void CheckEmbedding(const PromptEmbedding& embedding) const;

  std::shared_ptr<const EstimatorParameters> params_;
  std::string version_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<Slot> slots_;
};

// ---------------------------------------------------------------------------
// Losses over one record's candidate vector.

struct LossConfig {
  double margin = 0.05;       // hinge
  double temperature = 0.05;  // listnet
};

struct LossResult {
  double value = 0.0;
  std::vector<double> gradient;  // d value / d prediction
};

LossResult ComputeLoss(LossKind kind, std::span<const double> predictions,
                       std::span<const double> labels, const LossConfig& config = {});

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  LossKind loss = LossKind::kMse;
  LossConfig loss_config;
  double learning_rate = 0.05;
  double momentum = 0.0;  // 0 or 0.9 in practice
  int batch_size = 32;
  int epochs = 10;
  uint64_t seed = 1;
  int hidden = 256;
  int identity_dim = 128;
  int validation_every = 1;  // epochs; 0 disables
  // Empty trains every family candidate in registry order.
  std::vector<std::string> candidates;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_mae;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int64_t steps = 0;
};

struct TrainResult {
  EstimatorParameters params;
  TrainLog log;
};

// Deterministic given config.seed. Throws kInternal naming the step on a
// non-finite loss.
TrainResult Train(const DatasetSplit& train, const Registry& registry,
                  const Encoder& encoder, const TrainConfig& config,
                  const DatasetSplit* dev = nullptr);

// One training example in encoded form; labels follow the params' core
// candidate order.
struct EncodedSample {
  std::vector<double> prompt;
  std::vector<double> labels;
};

// Mean loss over `samples` and its gradient with respect to every core tensor.
// `gradient` receives the same shapes as `params` (identities included).
double LossAndGradient(const EstimatorParameters& params,
                       std::span<const EncodedSample> samples, LossKind kind,
                       const LossConfig& config, EstimatorParameters* gradient);

// Max over all core parameters of |a - n| / max(|a| + |n|, 1e-6), where a is
// the analytic and n the central finite-difference derivative.
double GradientCheck(const EstimatorParameters& params, const EncodedSample& sample,
                     LossKind kind, const LossConfig& config, double epsilon);

// Flat views over the trainable core tensors, in a fixed order.
std::vector<std::span<double>> CoreTensors(EstimatorParameters& params);

// Mean |r_hat - r| over all (record, candidate) pairs of `split`.
double DatasetMae(const QualityEstimator& estimator, const Encoder& encoder,
                  const DatasetSplit& split);

// ---------------------------------------------------------------------------
// Adapter onboarding.

struct AdapterConfig {
  int width = 32;
  int head_hidden = 64;
  double new_fraction = 0.7;
  double old_fraction = 0.3;
  double consistency_weight = 1.0;  // lambda
  int steps = 2000;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.0;
  uint64_t seed = 1;
};

// One adapter training example. New-candidate samples carry one target (the
// label); old samples carry the frozen prediction for every core candidate.
struct AdapterSample {
  std::vector<double> prompt;
  std::vector<double> targets;
  bool is_new = false;
};

// Loss (1/B) [sum_new (r_new - r)^2 + lambda sum_old sum_c (r_c - f_c)^2] over
// B = samples.size(), and its gradient with respect to the adapter block.
double AdapterLossAndGradient(const EstimatorParameters& params,
                              std::span<const AdapterSample> samples, double lambda,
                              AdapterBlock* gradient);

// Flat views over the trainable adapter tensors, in a fixed order.
std::vector<std::span<double>> AdapterTensors(AdapterBlock& block);

// Adapter block with identity mappings and a freshly initialized head.
AdapterBlock InitAdapter(const EstimatorParameters& frozen, std::string new_candidate,
                         const AdapterConfig& config);

// Trains an adapter block for `new_candidate`. Every tensor of `frozen` is
// copied unchanged into the result. new_data records must label the new
// candidate; old_data records must label every core candidate.
EstimatorParameters ExtendWithAdapter(const EstimatorParameters& frozen,
                                      const std::string& new_candidate,
                                      const DatasetSplit& new_data,
                                      const DatasetSplit& old_data, const Encoder& encoder,
                                      const AdapterConfig& config);

// ---------------------------------------------------------------------------
// Parameter files.
//
// Layout: the 8 bytes "QRPARAM\n", a little-endian uint64 header length, a
// JSON header, then every tensor listed in the header's manifest as
// little-endian IEEE-754 doubles in manifest order.

inline constexpr int kParamsFormatVersion = 1;

std::string SerializeParams(const EstimatorParameters& params);
EstimatorParameters DeserializeParams(std::string_view bytes);
void SaveParams(const EstimatorParameters& params, const std::string& path);
EstimatorParameters LoadParams(const std::string& path);

// Checks that every candidate is registered and that the encoder matches the
// parameters' input dimension. Throws naming the offending candidate.
void ValidateParams(const EstimatorParameters& params, const Registry& registry,
                    const Encoder* encoder = nullptr);

}  // namespace qroute

#endif  // QROUTE_ESTIMATOR_H_

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


// Offline evaluation: prediction metrics, the normalized cost model,
// quality-cost curves, bounded and relative ARQGC, cost-save ratio, and the
// baseline policies.
//
// Every policy maps (dataset, tolerance) to one selected candidate per record.
// Metrics then consume that selection together with the realized labels, so
// the estimator-driven router and every baseline are scored by the same code.

#ifndef QROUTE_EVALSUITE_H_
#define QROUTE_EVALSUITE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qroute/dataset.h"
#include "qroute/encoder.h"
#include "qroute/estimator.h"
#include "qroute/registry.h"
#include "qroute/router.h"

namespace qroute {

inline constexpr int kReportVersion = 1;
inline constexpr std::string_view kCurveCsvHeader = "tolerance,cost,quality,alpha,quality_norm";

// Dense view of a labeled split over a fixed candidate list (registry order).
struct EvalData {
  const DatasetSplit* split = nullptr;
  const Registry* registry = nullptr;
  std::string family;
  std::vector<std::string> candidate_ids;
  std::vector<std::vector<double>> rewards;         // [record][candidate]
  std::vector<std::vector<int64_t>> output_tokens;  // [record][candidate]
  std::vector<int64_t> input_tokens;                // [record]
  std::vector<int64_t> input_nanos;                 // per 1K tokens
  std::vector<int64_t> output_nanos;
  std::vector<int64_t> cost_keys;  // default weights
  std::vector<size_t> order;       // registry positions
  std::string fingerprint;

  size_t num_records() const { return rewards.size(); }
  size_t num_candidates() const { return candidate_ids.size(); }

  // Candidates default to the split's family in registry order. The split
  // and registry must outlive the result.
  static EvalData Build(const DatasetSplit& split, const Registry& registry,
                        std::vector<std::string> candidates = {});
};

// Candidate index per record.
using Selection = std::vector<size_t>;

// ---------------------------------------------------------------------------
// Prediction metrics over [record][candidate] matrices.

double Mae(std::span<const std::vector<double>> estimates,
           std::span<const std::vector<double>> labels);

// Candidate indices sorted by value descending; ties by index.
std::vector<size_t> RankOrder(std::span<const double> values);

double TopKAccuracy(std::span<const std::vector<double>> estimates,
                    std::span<const std::vector<double>> labels, int k);
// Per-record |pred ∩ true| / k, averaged.
double TopKF1(std::span<const std::vector<double>> estimates,
              std::span<const std::vector<double>> labels, int k);
// Per-candidate F1 over membership in the top-k sets, averaged over candidates
// that appear in at least one predicted or true set.
double TopKF1Macro(std::span<const std::vector<double>> estimates,
                   std::span<const std::vector<double>> labels, int k);

// ---------------------------------------------------------------------------
// Cost and quality of a selection.

// sum L_i P_i / sum L_i + sum O_i Q_i / sum O_i, prices per token.
double NormalizedCost(const EvalData& data, const Selection& selection);
double MeanQuality(const EvalData& data, const Selection& selection);
std::vector<double> RouteShares(const EvalData& data, const Selection& selection);
// Fraction of records whose selection is a cost-cheapest member of the label
// argmax set.
double RoutingAccuracy(const EvalData& data, const Selection& selection);

struct Anchors {
  size_t cheapest = 0;   // lowest normalized cost
  size_t strongest = 0;  // highest mean quality; ties to higher cost
  double cost_min = 0.0;
  double cost_max = 0.0;
  double quality_min = 0.0;
  double quality_max = 0.0;
};

Anchors ComputeAnchors(const EvalData& data);

// ---------------------------------------------------------------------------
// Policies.

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  // Called once per dataset before any Select.
  virtual void Prepare(const EvalData& data) { (void)data; }
  virtual Selection Select(const EvalData& data, double tolerance) const = 0;
  // [record][candidate] quality estimates when the policy has them.
  virtual const std::vector<std::vector<double>>* Estimates() const { return nullptr; }
};

// The learned router: estimator + encoder + gate.
class EstimatorPolicy final : public Policy {
 public:
  EstimatorPolicy(std::shared_ptr<const QualityEstimator> estimator,
                  std::shared_ptr<const Encoder> encoder, RouterConfig config,
                  std::string name = "ipr");
  std::string name() const override { return name_; }
  void Prepare(const EvalData& data) override;
  Selection Select(const EvalData& data, double tolerance) const override;
  const std::vector<std::vector<double>>* Estimates() const override { return &estimates_; }

 private:
  std::shared_ptr<const QualityEstimator> estimator_;
  std::shared_ptr<const Encoder> encoder_;
  RouterConfig config_;
  std::string name_;
  std::vector<std::vector<double>> estimates_;
  std::vector<int64_t> cost_keys_;
};

// True labels through the dynamic_max gate.
class OraclePolicy final : public Policy {
 public:
  std::string name() const override { return "oracle"; }
  void Prepare(const EvalData& data) override { labels_ = data.rewards; }
  Selection Select(const EvalData& data, double tolerance) const override;
  const std::vector<std::vector<double>>* Estimates() const override { return &labels_; }

 private:
  std::vector<std::vector<double>> labels_;
};

enum class StaticChoice { kStrongest, kCheapest };

class StaticPolicy final : public Policy {
 public:
  explicit StaticPolicy(StaticChoice choice) : choice_(choice) {}
  std::string name() const override;
  Selection Select(const EvalData& data, double tolerance) const override;

 private:
  StaticChoice choice_;
};

// Always one named candidate.
class FixedPolicy final : public Policy {
 public:
  explicit FixedPolicy(std::string candidate_id) : candidate_id_(std::move(candidate_id)) {}
  std::string name() const override { return "fixed:" + candidate_id_; }
  Selection Select(const EvalData& data, double tolerance) const override;

 private:
  std::string candidate_id_;
};

// Each record independently goes to the cheapest candidate with probability
// tau and to the strongest otherwise.
class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  Selection Select(const EvalData& data, double tolerance) const override;

 private:
  uint64_t seed_;
};

// Uniform over all candidates regardless of tolerance.
class UniformRandomPolicy final : public Policy {
 public:
  explicit UniformRandomPolicy(uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "uniform_random"; }
  Selection Select(const EvalData& data, double tolerance) const override;

 private:
  uint64_t seed_;
};

// Draws each record's candidate from the reference policy's route shares at
// the same tolerance.
class BudgetAwareRandomPolicy final : public Policy {
 public:
  BudgetAwareRandomPolicy(std::shared_ptr<Policy> reference, uint64_t seed);
  std::string name() const override { return "budget_aware_random"; }
  void Prepare(const EvalData& data) override { reference_->Prepare(data); }
  Selection Select(const EvalData& data, double tolerance) const override;

  // Independent multinomial draws with the given shares.
  static Selection Draw(std::span<const double> shares, size_t n, uint64_t seed);

 private:
  std::shared_ptr<Policy> reference_;
  uint64_t seed_;
};

struct ClassifierConfig {
  double margin = 0.05;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  int epochs = 20;
  int batch_size = 32;
  uint64_t seed = 1;
};

// Logistic model over encoder features predicting whether the cheapest
// candidate's reward is within `margin` of the record's best. A record goes
// to the cheapest candidate when P >= 1 - tau and to the strongest otherwise.
class BinaryClassifierPolicy final : public Policy {
 public:
  BinaryClassifierPolicy(std::shared_ptr<const Encoder> encoder, ClassifierConfig config);
  std::string name() const override { return "binary_classifier"; }
  // Fits on `train`, which must cover the evaluation candidates.
  void Fit(const DatasetSplit& train, const Registry& registry,
           std::vector<std::string> candidates = {});
  void Prepare(const EvalData& data) override;
  Selection Select(const EvalData& data, double tolerance) const override;
  double Probability(std::span<const double> features) const;
  bool fitted() const { return !weights_.empty(); }

 private:
  std::shared_ptr<const Encoder> encoder_;
  ClassifierConfig config_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  std::string cheapest_id_;
  std::string strongest_id_;
  std::vector<double> probabilities_;
};

// ---------------------------------------------------------------------------
// Curves and area metrics.

struct CurvePoint {
  std::optional<double> tolerance;  // empty for anchors
  double cost = 0.0;
  double quality = 0.0;
  double alpha = 0.0;
  double quality_norm = 0.0;
};

struct QualityCostCurve {
  std::vector<CurvePoint> points;  // ascending cost
  Anchors anchors;
  int clamp_events = 0;  // alpha values pulled into [0, 1]
};

// Default sweep: 0, 0.05, ..., 1.
std::vector<double> DefaultToleranceGrid();

// Builds the curve from raw (tolerance, cost, quality) sweep points plus the
// two anchors: sort by cost, keep the best quality per cost, normalize.
QualityCostCurve BuildCurve(std::span<const CurvePoint> sweep, const Anchors& anchors);

QualityCostCurve SweepCurve(const Policy& policy, const EvalData& data,
                            std::span<const double> grid);

// Trapezoid area under the normalized curve with flat extension to alpha 0
// and 1, clamped to [0, 1]. A clamp adds one to *clamp_events if given.
double BoundedArqgc(const QualityCostCurve& curve, int* clamp_events = nullptr);

double RelArqgc(double policy, double oracle, double random);

struct CsrResult {
  double target_fraction = 1.0;
  double tolerance = 0.0;
  double csr = 0.0;
  double routing_accuracy = 0.0;
  double quality = 0.0;
  double cost = 0.0;
  std::vector<double> shares;
  bool target_met = true;
};

// Largest tolerance on an evenly spaced grid of `grid_points` values whose
// mean realized quality reaches target * (strongest quality).
CsrResult CsrAtQuality(const Policy& policy, const EvalData& data, double target_fraction,
                       int grid_points = 1001);

// ---------------------------------------------------------------------------
// Reports.

struct EvaluationConfig {
  std::vector<double> tolerance_grid = DefaultToleranceGrid();
  std::vector<double> csr_targets = {1.0, 0.95};
  std::vector<int> top_k = {1, 2, 3};  // values above |C| - 1 are skipped
  double operating_tolerance = 0.5;
  int csr_grid_points = 1001;
  uint64_t seed = 1;
};

struct RelativeReference {
  double oracle = 0.0;
  double random = 0.0;
};

struct EvaluationReport {
  int version = kReportVersion;
  std::string family;
  std::string policy;
  std::vector<std::string> candidates;
  size_t records = 0;
  std::optional<double> mae;
  std::map<int, double> top_k_accuracy;
  std::map<int, double> top_k_f1;
  std::map<int, double> top_k_f1_macro;
  double b_arqgc = 0.0;
  std::optional<double> rel_arqgc;
  std::vector<CsrResult> csr;
  double operating_tolerance = 0.0;
  double normalized_cost = 0.0;
  double quality = 0.0;
  std::vector<double> route_shares;
  int clamp_events = 0;
  uint64_t seed = 0;
  std::string dataset_fingerprint;
  QualityCostCurve curve;
};

// B-ARQGC of the oracle and the random baseline on `data`.
RelativeReference ComputeReference(const EvalData& data, const EvaluationConfig& config);

// Prepares the policy, computes every metric, and fills rel_arqgc when a
// reference is given. Metric failures are rethrown prefixed by the metric name.
EvaluationReport Evaluate(Policy& policy, const EvalData& data,
                          const EvaluationConfig& config,
                          const RelativeReference* reference = nullptr);

std::string ReportToJson(const EvaluationReport& report);
std::string CurveToCsv(const QualityCostCurve& curve);

}  // namespace qroute

#endif  // QROUTE_EVALSUITE_H_

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

#include "qroute/error.h"
#include "qroute/evalsuite.h"
#include "qroute/util.h"

namespace qroute {
namespace {

void CheckShapes(std::span<const std::vector<double>> estimates,
                 std::span<const std::vector<double>> labels) {
  if (estimates.empty()) ThrowInvalidArgument("empty input");
  if (estimates.size() != labels.size()) {
    ThrowInvalidArgument("estimates and labels cover different record counts");
  }
  for (size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].size() != labels[i].size() || estimates[i].empty()) {
      ThrowInvalidArgument("record " + std::to_string(i) +
                           ": estimates and labels cover different candidates");
    }
  }
}

void CheckK(std::span<const std::vector<double>> labels, int k) {
  const int n = static_cast<int>(labels[0].size());
  if (k < 1 || k > n - 1) {
    ThrowInvalidArgument("k=" + std::to_string(k) + " outside [1, " + std::to_string(n - 1) +
                         "]");
  }
}

void CheckSelection(const EvalData& data, const Selection& selection) {
  if (selection.empty()) ThrowInvalidArgument("empty decision list");
  if (selection.size() != data.num_records()) {
    ThrowInvalidArgument("selection covers " + std::to_string(selection.size()) +
                         " records, dataset has " + std::to_string(data.num_records()));
  }
  for (size_t s : selection) {
    if (s >= data.num_candidates()) ThrowInvalidArgument("selection index out of range");
  }
}

}  // namespace

EvalData EvalData::Build(const DatasetSplit& split, const Registry& registry,
                         std::vector<std::string> candidates) {
  if (split.empty()) ThrowInvalidArgument("evaluation split is empty");
  EvalData data;
  data.split = &split;
  data.registry = &registry;
  data.family = split.family();
  data.candidate_ids =
      candidates.empty() ? registry.IdsOfFamily(data.family) : std::move(candidates);
  if (data.candidate_ids.empty()) ThrowInvalidArgument("no candidates to evaluate");
  for (const std::string& id : data.candidate_ids) {
    const ModelCandidate& c = registry.Get(id);
    data.input_nanos.push_back(c.input_price.nanos());
    data.output_nanos.push_back(c.output_price.nanos());
    data.cost_keys.push_back(registry.CostKey(id));
    data.order.push_back(registry.IndexOf(id));
  }
  for (const PromptRecord& r : split.records) {
    std::vector<double> rewards;
    std::vector<int64_t> out_tokens;
    for (const std::string& id : data.candidate_ids) {
      const CandidateLabel& label = r.Label(id);
      rewards.push_back(label.reward);
      out_tokens.push_back(label.output_tokens);
    }
    data.rewards.push_back(std::move(rewards));
    data.output_tokens.push_back(std::move(out_tokens));
    data.input_tokens.push_back(r.input_tokens);
  }
  data.fingerprint = Fingerprint(split);
  return data;
}

double Mae(std::span<const std::vector<double>> estimates,
           std::span<const std::vector<double>> labels) {
  CheckShapes(estimates, labels);
  std::vector<double> errors;
  for (size_t i = 0; i < estimates.size(); ++i) {
    for (size_t c = 0; c < estimates[i].size(); ++c) {
      errors.push_back(std::abs(estimates[i][c] - labels[i][c]));
    }
  }
  return PairwiseMean(errors);
}

std::vector<size_t> RankOrder(std::span<const double> values) {
  std::vector<size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t a, size_t b) { return values[a] > values[b]; });
  return idx;
}

double TopKAccuracy(std::span<const std::vector<double>> estimates,
                    std::span<const std::vector<double>> labels, int k) {
  CheckShapes(estimates, labels);
  CheckK(labels, k);
  std::vector<double> hits;
  for (size_t i = 0; i < estimates.size(); ++i) {
    const std::vector<size_t> p = RankOrder(estimates[i]);
    const std::vector<size_t> t = RankOrder(labels[i]);
    hits.push_back(std::equal(p.begin(), p.begin() + k, t.begin()) ? 1.0 : 0.0);
  }
  return PairwiseMean(hits);
}

double TopKF1(std::span<const std::vector<double>> estimates,
              std::span<const std::vector<double>> labels, int k) {
  CheckShapes(estimates, labels);
  CheckK(labels, k);
  std::vector<double> scores;
  for (size_t i = 0; i < estimates.size(); ++i) {
    std::vector<size_t> p = RankOrder(estimates[i]);
    std::vector<size_t> t = RankOrder(labels[i]);
    p.resize(k);
    t.resize(k);
    std::sort(p.begin(), p.end());
    std::sort(t.begin(), t.end());
    std::vector<size_t> both;
    std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(both));
    scores.push_back(static_cast<double>(both.size()) / k);
  }
  return PairwiseMean(scores);
}

double TopKF1Macro(std::span<const std::vector<double>> estimates,
                   std::span<const std::vector<double>> labels, int k) {
  CheckShapes(estimates, labels);
  CheckK(labels, k);
  const size_t n = labels[0].size();
  std::vector<int64_t> tp(n, 0), fp(n, 0), fn(n, 0);
  for (size_t i = 0; i < estimates.size(); ++i) {
    const std::vector<size_t> p = RankOrder(estimates[i]);
    const std::vector<size_t> t = RankOrder(labels[i]);
    std::vector<char> in_p(n, 0), in_t(n, 0);
    for (int j = 0; j < k; ++j) {
      in_p[p[j]] = 1;
      in_t[t[j]] = 1;
    }
    for (size_t c = 0; c < n; ++c) {
      if (in_p[c] && in_t[c]) ++tp[c];
      if (in_p[c] && !in_t[c]) ++fp[c];
      if (!in_p[c] && in_t[c]) ++fn[c];
    }
  }
  std::vector<double> f1;
  for (size_t c = 0; c < n; ++c) {
    const int64_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;
    f1.push_back(2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom));
  }
  return PairwiseMean(f1);
}

double NormalizedCost(const EvalData& data, const Selection& selection) {
  CheckSelection(data, selection);
  __int128 sum_l = 0, sum_o = 0, sum_lp = 0, sum_oq = 0;
  for (size_t i = 0; i < selection.size(); ++i) {
    const size_t c = selection[i];
    const int64_t l = data.input_tokens[i];
    const int64_t o = data.output_tokens[i][c];
    sum_l += l;
    sum_o += o;
    sum_lp += static_cast<__int128>(l) * data.input_nanos[c];
    sum_oq += static_cast<__int128>(o) * data.output_nanos[c];
  }
  if (sum_l == 0 || sum_o == 0) ThrowInvalidArgument("degenerate token totals");
  // Nanos per 1K tokens -> currency per token.
  constexpr double kPerToken = 1e-12;
  const double input_term = static_cast<double>(sum_lp) / static_cast<double>(sum_l);
  const double output_term = static_cast<double>(sum_oq) / static_cast<double>(sum_o);
  return (input_term + output_term) * kPerToken;
}

double MeanQuality(const EvalData& data, const Selection& selection) {
  CheckSelection(data, selection);
  std::vector<double> q(selection.size());
  for (size_t i = 0; i < selection.size(); ++i) q[i] = data.rewards[i][selection[i]];
  return PairwiseMean(q);
}

std::vector<double> RouteShares(const EvalData& data, const Selection& selection) {
  CheckSelection(data, selection);
  std::vector<int64_t> counts(data.num_candidates(), 0);
  for (size_t s : selection) ++counts[s];
  std::vector<double> shares(counts.size());
  for (size_t c = 0; c < counts.size(); ++c) {
    shares[c] = static_cast<double>(counts[c]) / static_cast<double>(selection.size());
  }
  return shares;
}

double RoutingAccuracy(const EvalData& data, const Selection& selection) {
  CheckSelection(data, selection);
  int64_t correct = 0;
  for (size_t i = 0; i < selection.size(); ++i) {
    const std::vector<double>& r = data.rewards[i];
    const double best = *std::max_element(r.begin(), r.end());
    int64_t cheapest_best = INT64_MAX;
    for (size_t c = 0; c < r.size(); ++c) {
      if (r[c] == best) cheapest_best = std::min(cheapest_best, data.cost_keys[c]);
    }
    const size_t s = selection[i];
    if (r[s] == best && data.cost_keys[s] == cheapest_best) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(selection.size());
}

Anchors ComputeAnchors(const EvalData& data) {
  Anchors a;
  std::vector<double> costs(data.num_candidates());
  std::vector<double> quality(data.num_candidates());
  for (size_t c = 0; c < data.num_candidates(); ++c) {
    const Selection all(data.num_records(), c);
    costs[c] = NormalizedCost(data, all);
    quality[c] = MeanQuality(data, all);
  }
  for (size_t c = 1; c < data.num_candidates(); ++c) {
    if (costs[c] < costs[a.cheapest] ||
        (costs[c] == costs[a.cheapest] && quality[c] > quality[a.cheapest])) {
      a.cheapest = c;
    }
    if (quality[c] > quality[a.strongest] ||
        (quality[c] == quality[a.strongest] && costs[c] > costs[a.strongest])) {
      a.strongest = c;
    }
  }
  a.cost_min = costs[a.cheapest];
  a.cost_max = costs[a.strongest];
  a.quality_min = quality[a.cheapest];
  a.quality_max = quality[a.strongest];
  return a;
}

}  // namespace qroute

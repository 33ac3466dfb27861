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

#include "qroute/error.h"
#include "qroute/estimator.h"

namespace qroute {

std::string_view LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kMse:
      return "mse";
    case LossKind::kHinge:
      return "hinge";
    case LossKind::kListNet:
      return "listnet";
  }
  return "unknown";
}

LossKind ParseLossKind(std::string_view name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "hinge") return LossKind::kHinge;
  if (name == "listnet") return LossKind::kListNet;
  ThrowInvalidArgument("unknown loss '" + std::string(name) +
                       "' (expected mse, hinge or listnet)");
}

namespace {

// Log-softmax of x / t.
std::vector<double> LogSoftmax(std::span<const double> x, double t) {
  double top = -INFINITY;
  for (double v : x) top = std::max(top, v / t);
  double sum = 0.0;
  for (double v : x) sum += std::exp(v / t - top);
  const double log_z = top + std::log(sum);
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] / t - log_z;
  return out;
}

}  // namespace

LossResult ComputeLoss(LossKind kind, std::span<const double> predictions,
                       std::span<const double> labels, const LossConfig& config) {
  if (predictions.size() != labels.size()) {
    ThrowInvalidArgument("loss: " + std::to_string(predictions.size()) +
                         " predictions but " + std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) ThrowInvalidArgument("loss: empty candidate vector");
  for (double r : labels) {
    if (!(r >= 0.0 && r <= 1.0)) ThrowInvalidArgument("loss: label outside [0, 1]");
  }
  const size_t n = predictions.size();
  LossResult result;
  result.gradient.assign(n, 0.0);

  switch (kind) {
    case LossKind::kMse: {
      const double inv = 1.0 / static_cast<double>(n);
      for (size_t i = 0; i < n; ++i) {
        const double diff = predictions[i] - labels[i];
        result.value += diff * diff;
        result.gradient[i] = 2.0 * diff * inv;
      }
      result.value *= inv;
      break;
    }
    case LossKind::kHinge: {
      if (config.margin < 0.0) ThrowInvalidArgument("hinge margin must be >= 0");
      size_t pairs = 0;
      for (size_t a = 0; a < n; ++a) {
        for (size_t b = 0; b < n; ++b) {
          if (labels[a] > labels[b]) ++pairs;
        }
      }
      if (pairs == 0) break;
      const double inv = 1.0 / static_cast<double>(pairs);
      for (size_t a = 0; a < n; ++a) {
        for (size_t b = 0; b < n; ++b) {
          if (!(labels[a] > labels[b])) continue;
          const double slack = config.margin - (predictions[a] - predictions[b]);
          if (slack > 0.0) {
            result.value += slack;
            result.gradient[a] -= inv;
            result.gradient[b] += inv;
          }
        }
      }
      result.value *= inv;
      break;
    }
    case LossKind::kListNet: {
      const double t = config.temperature;
      if (!(t > 0.0)) ThrowInvalidArgument("listnet temperature must be > 0");
      const std::vector<double> log_p = LogSoftmax(labels, t);
      const std::vector<double> log_q = LogSoftmax(predictions, t);
      for (size_t i = 0; i < n; ++i) {
        const double p = std::exp(log_p[i]);
        result.value -= p * log_q[i];
        result.gradient[i] = (std::exp(log_q[i]) - p) / t;
      }
      break;
    }
  }
  return result;
}

}  // namespace qroute

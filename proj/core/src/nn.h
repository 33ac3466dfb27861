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


// Shared numeric kernels for the estimator sources. Every path that scores a
// candidate goes through these functions so results agree to the last bit.

#ifndef QROUTE_SRC_NN_H_
#define QROUTE_SRC_NN_H_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qroute/estimator.h"
#include "qroute/util.h"

namespace qroute::internal {

inline double Dot(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// out[j] = W1[j, :d] . p
inline void PromptProjection(const PredictorParameters& net, std::span<const double> p,
                             std::span<double> out) {
  const size_t stride = static_cast<size_t>(net.input_dim + net.identity_dim);
  for (int j = 0; j < net.hidden; ++j) {
    out[j] = Dot(net.w1.data() + j * stride, p.data(), static_cast<size_t>(net.input_dim));
  }
}

// out[j] = b1[j] + W1[j, d:] . e
inline void IdentityBias(const PredictorParameters& net, std::span<const double> e,
                         std::span<double> out) {
  const size_t stride = static_cast<size_t>(net.input_dim + net.identity_dim);
  for (int j = 0; j < net.hidden; ++j) {
    out[j] = net.b1[j] + Dot(net.w1.data() + j * stride + net.input_dim, e.data(),
                             static_cast<size_t>(net.identity_dim));
  }
}

// Pre-sigmoid score from the two projections.
inline double Logit(const PredictorParameters& net, const double* pp, const double* ib) {
  double acc = 0.0;
  for (int j = 0; j < net.hidden; ++j) {
    const double z = pp[j] + ib[j];
    if (!(z <= 0.0)) acc += net.w2[j] * z;  // NaN propagates
  }
  return acc + net.b2;
}

// p' = p + Wb relu(Wa p + ba) + bb. `hidden` receives the pre-activation.
inline void AdaptPrompt(const PromptAdapter& ad, std::span<const double> p,
                        std::span<double> hidden, std::span<double> out) {
  const size_t d = p.size();
  const size_t w = static_cast<size_t>(ad.width);
  for (size_t k = 0; k < w; ++k) hidden[k] = Dot(ad.wa.data() + k * d, p.data(), d) + ad.ba[k];
  for (size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    const double* row = ad.wb.data() + i * w;
    for (size_t k = 0; k < w; ++k) {
      if (!(hidden[k] <= 0.0)) acc += row[k] * hidden[k];
    }
    out[i] = (p[i] + acc) + ad.bb[i];
  }
}

// e' = A e + c
inline void AdaptIdentity(const IdentityAdapter& ad, std::span<const double> e,
                          std::span<double> out) {
  const size_t n = e.size();
  for (size_t i = 0; i < n; ++i) out[i] = Dot(ad.a.data() + i * n, e.data(), n) + ad.c[i];
}

inline double GlorotBound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

inline void FillUniform(Rng& rng, std::vector<double>& v, double bound) {
  for (double& x : v) x = rng.Uniform(-bound, bound);
}

inline PredictorParameters GlorotPredictor(Rng& rng, int d, int d_id, int h) {
  PredictorParameters net;
  net.input_dim = d;
  net.identity_dim = d_id;
  net.hidden = h;
  net.w1.resize(static_cast<size_t>(h) * (d + d_id));
  net.b1.assign(h, 0.0);
  net.w2.resize(h);
  FillUniform(rng, net.w1, GlorotBound(d + d_id, h));
  FillUniform(rng, net.w2, GlorotBound(h, 1));
  return net;
}

inline PredictorParameters ZerosLike(const PredictorParameters& net) {
  PredictorParameters z = net;
  std::fill(z.w1.begin(), z.w1.end(), 0.0);
  std::fill(z.b1.begin(), z.b1.end(), 0.0);
  std::fill(z.w2.begin(), z.w2.end(), 0.0);
  z.b2 = 0.0;
  return z;
}

// Plain gradient descent with optional heavy-ball momentum:
// v = mu v + g; theta -= lr v.
class Sgd {
 public:
  Sgd(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  void Step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<double>>& grads) {
    if (velocity_.empty()) {
      for (const auto& p : params) velocity_.emplace_back(p.size(), 0.0);
    }
    for (size_t t = 0; t < params.size(); ++t) {
      std::span<double> p = params[t];
      std::span<double> g = grads[t];
      std::vector<double>& v = velocity_[t];
      for (size_t i = 0; i < p.size(); ++i) {
        v[i] = momentum_ * v[i] + g[i];
        p[i] -= lr_ * v[i];
      }
    }
  }

 private:
  double lr_;
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace qroute::internal

#endif  // QROUTE_SRC_NN_H_

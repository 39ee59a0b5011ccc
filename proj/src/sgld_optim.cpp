// Copyright 2026 The lmcrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lmcrl/sgld_optim.hpp"

#include <cmath>
#include <limits>

#include "lmcrl/errors.hpp"

namespace lmcrl {
namespace {

// Moment estimates of parameters with identically zero gradient decay
// geometrically into the subnormal range, where arithmetic is very slow.
// Values below the smallest normal double are flushed to zero.
inline double flush(double x) {
  return std::abs(x) < std::numeric_limits<double>::min() ? 0.0 : x;
}

}  // namespace

double langevin_noise_scale(double eta, double beta) {
  if (std::isinf(beta)) return 0.0;
  return std::sqrt(2.0 * eta / beta);
}

void sgld_step(Vector& w, const Vector& grad, double eta, double beta,
               Rng& rng) {
  if (grad.size() != w.size()) throw DimensionMismatch("sgld_step: grad");
  const double scale = langevin_noise_scale(eta, beta);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double noise = rng.normal();
    w[i] = w[i] - eta * grad[i] + scale * noise;
  }
}

AdamSgldState::AdamSgldState(Vector w0, const AdamSgldHyper& h)
    : w(std::move(w0)),
      m(Vector::Zero(w.size())),
      v(Vector::Zero(w.size())),
      hyper(h) {}

void asgld_step(AdamSgldState& s, const Vector& grad, Rng& rng) {
  if (grad.size() != s.w.size()) throw DimensionMismatch("asgld_step: grad");
  if (!grad.allFinite()) throw NonFiniteGradient("gradient has NaN or Inf");
  const AdamSgldHyper& p = s.hyper;
  const double scale = langevin_noise_scale(p.eta, p.beta);
  for (Eigen::Index i = 0; i < s.w.size(); ++i) {
    const double noise = rng.normal();
    const double drift = p.a * s.m[i] / std::sqrt(s.v[i] + p.lambda1);
    s.w[i] = s.w[i] - p.eta * (grad[i] + drift) + scale * noise;
    s.m[i] = flush(p.alpha1 * s.m[i] + (1.0 - p.alpha1) * grad[i]);
    s.v[i] = flush(p.alpha2 * s.v[i] + (1.0 - p.alpha2) * grad[i] * grad[i]);
  }
}

AdamState::AdamState(Vector w0, double learning_rate)
    : w(std::move(w0)),
      m(Vector::Zero(w.size())),
      v(Vector::Zero(w.size())),
      lr(learning_rate) {}

void adam_step(AdamState& s, const Vector& grad) {
  if (grad.size() != s.w.size()) throw DimensionMismatch("adam_step: grad");
  if (!grad.allFinite()) throw NonFiniteGradient("gradient has NaN or Inf");
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (Eigen::Index i = 0; i < s.w.size(); ++i) {
    s.m[i] = flush(s.beta1 * s.m[i] + (1.0 - s.beta1) * grad[i]);
    s.v[i] = flush(s.beta2 * s.v[i] + (1.0 - s.beta2) * grad[i] * grad[i]);
    const double m_hat = s.m[i] / c1;
    const double v_hat = s.v[i] / c2;
    s.w[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace lmcrl

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

#ifndef LMCRL_SGLD_OPTIM_HPP_
#define LMCRL_SGLD_OPTIM_HPP_

#include <limits>

#include "lmcrl/numerics.hpp"
#include "lmcrl/rng.hpp"

namespace lmcrl {

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

// sqrt(2 eta / beta); zero in the beta = infinity limit.
double langevin_noise_scale(double eta, double beta);

// w <- w - eta * grad + sqrt(2 eta / beta) * eps, eps ~ N(0, I).
// Noise is always drawn so the RNG stream does not depend on beta.
void sgld_step(Vector& w, const Vector& grad, double eta, double beta,
               Rng& rng);

struct AdamSgldHyper {
  double eta = 1e-3;
  double beta = kInfiniteBeta;
  double a = 1.0;        // bias factor
  double alpha1 = 0.9;   // first-moment smoothing
  double alpha2 = 0.99;  // second-moment smoothing
  double lambda1 = 1e-8;
};

struct AdamSgldState {
  AdamSgldState() = default;
  AdamSgldState(Vector w0, const AdamSgldHyper& h);

  Vector w;
  Vector m;
  Vector v;
  AdamSgldHyper hyper;
};

// One Adam SGLD update. The parameter step reads the moments from the
// previous iteration; m and v are refreshed afterwards. There is no bias
// correction. Throws NonFiniteGradient on NaN/Inf input.
void asgld_step(AdamSgldState& state, const Vector& grad, Rng& rng);

// Plain Adam (with bias correction), used by the epsilon-greedy DQN baseline.
struct AdamState {
  AdamState() = default;
  AdamState(Vector w0, double lr);

  Vector w;
  Vector m;
  Vector v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
};

void adam_step(AdamState& state, const Vector& grad);

}  // namespace lmcrl

#endif  // LMCRL_SGLD_OPTIM_HPP_

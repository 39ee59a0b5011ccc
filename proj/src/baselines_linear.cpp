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

#include "lmcrl/baselines_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "lmcrl/errors.hpp"

namespace lmcrl {

void UcbConfig::validate() const {
  if (!(bonus >= 0.0)) throw ConfigError("ucb bonus must be non-negative");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
}

void PheConfig::validate() const {
  if (M < 1) throw ConfigError("phe ensemble size must be >= 1");
  if (!(sigma >= 0.0)) throw ConfigError("phe sigma must be non-negative");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
}

LsviUcbAgent::LsviUcbAgent(FeatureMap feature, int horizon,
                           const UcbConfig& config)
    : config_(config) {
  config_.validate();
  q_.assign(horizon, Matrix::Zero(feature.n_states, feature.n_actions));
  data_ = LinearData(std::move(feature), horizon, config.lambda);
}

void LsviUcbAgent::record(int h, int state, int action, double reward,
                          int next_state) {
  data_.record(h, state, action, reward, next_state);
}

void LsviUcbAgent::plan() {
  ++episode_;
  const FeatureMap& f = data_.feature();
  const int H = data_.horizon();
  Vector v_next = Vector::Zero(f.n_states);
  for (int h = H - 1; h >= 0; --h) {
    data_.rebuild_targets(h, v_next, episode_);
    const Cholesky chol(data_.gram(h));
    const Vector& w = data_.w_hat(h);
    const double cap = H - h;
    for (int s = 0; s < f.n_states; ++s) {
      for (int a = 0; a < f.n_actions; ++a) {
        const Vector phi = f.phi(s, a);
        const double q = phi.dot(w) + config_.bonus * chol.inverse_norm(phi);
        q_[h](s, a) = std::clamp(q, 0.0, cap);
      }
    }
    v_next = q_[h].rowwise().maxCoeff();
  }
}

LsviPheAgent::LsviPheAgent(FeatureMap feature, int horizon,
                           const PheConfig& config, std::uint64_t seed)
    : config_(config), rng_(seed) {
  config_.validate();
  q_.assign(horizon, Matrix::Zero(feature.n_states, feature.n_actions));
  ensemble_.assign(horizon, {});
  data_ = LinearData(std::move(feature), horizon, config.lambda);
}

void LsviPheAgent::record(int h, int state, int action, double reward,
                          int next_state) {
  data_.record(h, state, action, reward, next_state);
}

Vector LsviPheAgent::perturbed_solution(int h, const Cholesky& chol,
                                        Rng& rng) const {
  const double sigma = config_.sigma;
  Vector rhs = data_.b(h) + data_.grouped_noise(h, sigma, rng);
  // Ridge anchor: lambda |w - zeta|^2 with zeta ~ N(0, sigma^2 I).
  Vector zeta(data_.dim());
  for (Eigen::Index i = 0; i < zeta.size(); ++i) zeta[i] = sigma * rng.normal();
  rhs += data_.ridge() * zeta;
  return chol.solve(rhs);
}

void LsviPheAgent::plan() {
  ++episode_;
  const FeatureMap& f = data_.feature();
  const int H = data_.horizon();
  Vector v_next = Vector::Zero(f.n_states);
  for (int h = H - 1; h >= 0; --h) {
    data_.rebuild_targets(h, v_next, episode_);
    const Cholesky chol(data_.gram(h));
    std::vector<Vector>& members = ensemble_[h];
    members.clear();
    for (int m = 0; m < config_.M; ++m) {
      members.push_back(perturbed_solution(h, chol, rng_));
    }
    const double cap = H - h;
    for (int s = 0; s < f.n_states; ++s) {
      for (int a = 0; a < f.n_actions; ++a) {
        const Vector phi = f.phi(s, a);
        double best = -std::numeric_limits<double>::infinity();
        for (const Vector& w : members) best = std::max(best, phi.dot(w));
        q_[h](s, a) = std::clamp(best, 0.0, cap);
      }
    }
    v_next = q_[h].rowwise().maxCoeff();
  }
}

TableAgent make_oracle_agent(const EpisodicMdp& mdp) {
  return TableAgent("oracle", value_iteration(mdp).q);
}

TableAgent make_first_action_agent(const EpisodicMdp& mdp) {
  std::vector<Matrix> q(mdp.horizon(),
                        Matrix::Zero(mdp.n_states(), mdp.n_actions()));
  return TableAgent("first_action", std::move(q));
}

}  // namespace lmcrl

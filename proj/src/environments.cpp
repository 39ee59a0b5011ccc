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

#include "lmcrl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lmcrl/errors.hpp"

namespace lmcrl {

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kOneHot:
      return "one_hot";
    case FeatureKind::kThermometer:
      return "thermometer";
    case FeatureKind::kTabularLinear:
      return "tabular_linear";
  }
  return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& name) {
  if (name == "one_hot") return FeatureKind::kOneHot;
  if (name == "thermometer") return FeatureKind::kThermometer;
  if (name == "tabular_linear") return FeatureKind::kTabularLinear;
  throw ConfigError("unknown feature kind '" + name + "'");
}

double FeatureMap::max_norm() const {
  return table.rows() == 0 ? 0.0 : table.rowwise().norm().maxCoeff();
}

FeatureMap make_one_hot_features(int n_states, int n_actions) {
  FeatureMap f;
  f.kind = FeatureKind::kOneHot;
  f.n_states = n_states;
  f.n_actions = n_actions;
  f.table = Matrix::Identity(n_states * n_actions, n_states * n_actions);
  return f;
}

FeatureMap make_thermometer_features(int n_states, int n_actions,
                                     bool normalized) {
  FeatureMap f;
  f.kind = FeatureKind::kThermometer;
  f.n_states = n_states;
  f.n_actions = n_actions;
  f.table = Matrix::Zero(n_states * n_actions, n_states * n_actions);
  const double scale = normalized ? 1.0 / std::sqrt(n_states) : 1.0;
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      for (int x = 0; x <= s; ++x) {
        f.table(f.index(s, a), x * n_actions + a) = scale;
      }
    }
  }
  return f;
}

Vector state_observation(FeatureKind kind, int n_states, int s,
                         bool normalized) {
  Vector obs = Vector::Zero(n_states);
  if (kind == FeatureKind::kThermometer) {
    obs.head(s + 1).setOnes();
    if (normalized) obs /= std::sqrt(n_states);
  } else {
    obs[s] = 1.0;
  }
  return obs;
}

// ---------------------------------------------------------------------------
// EpisodicMdp

EpisodicMdp::EpisodicMdp(std::string name, int n_states, int n_actions,
                         int horizon, std::vector<Matrix> transitions,
                         std::vector<Matrix> rewards, Vector initial)
    : name_(std::move(name)),
      n_states_(n_states),
      n_actions_(n_actions),
      horizon_(horizon),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      initial_(std::move(initial)) {
  validate();
}

void EpisodicMdp::validate() const {
  if (n_states_ < 1 || n_actions_ < 1) {
    throw InvalidSize("MDP needs at least one state and one action");
  }
  if (horizon_ < 1) throw InvalidSize("horizon must be >= 1");
  auto sized = [&](std::size_t n) {
    return n == 1 || n == static_cast<std::size_t>(horizon_);
  };
  if (!sized(transitions_.size()) || !sized(rewards_.size())) {
    throw InvalidModel("tables must be stationary or given per step");
  }
  for (const Matrix& p : transitions_) {
    if (p.rows() != n_states_ * n_actions_ || p.cols() != n_states_) {
      throw DimensionMismatch("transition table has wrong shape");
    }
    if ((p.array() < 0.0).any()) {
      throw InvalidModel("negative transition probability");
    }
    for (int row = 0; row < p.rows(); ++row) {
      if (std::abs(p.row(row).sum() - 1.0) > 1e-10) {
        throw InvalidModel("transition row " + std::to_string(row) +
                           " does not sum to 1");
      }
    }
  }
  for (const Matrix& r : rewards_) {
    if (r.rows() != n_states_ || r.cols() != n_actions_) {
      throw DimensionMismatch("reward table has wrong shape");
    }
    if ((r.array() < 0.0).any() || (r.array() > 1.0).any()) {
      throw InvalidModel("rewards must lie in [0, 1]");
    }
  }
  if (initial_.size() != n_states_ || (initial_.array() < 0.0).any() ||
      std::abs(initial_.sum() - 1.0) > 1e-10) {
    throw InvalidModel("initial distribution is not a distribution");
  }
}

int EpisodicMdp::initial_state() const {
  Eigen::Index best = 0;
  initial_.maxCoeff(&best);
  return static_cast<int>(best);
}

const Matrix& EpisodicMdp::transitions(int h) const {
  return transitions_.size() == 1 ? transitions_.front() : transitions_.at(h);
}

const Matrix& EpisodicMdp::rewards(int h) const {
  return rewards_.size() == 1 ? rewards_.front() : rewards_.at(h);
}

// ---------------------------------------------------------------------------
// Linear MDP embedding

double linear_identity_error(const LinearMdpSpec& spec) {
  const EpisodicMdp& mdp = spec.mdp;
  const FeatureMap& f = spec.feature;
  double worst = 0.0;
  for (int h = 0; h < mdp.horizon(); ++h) {
    const Matrix predicted_p = f.table * spec.mu.at(h);
    worst = std::max(worst,
                     (predicted_p - mdp.transitions(h)).cwiseAbs().maxCoeff());
    const Vector predicted_r = f.table * spec.theta.at(h);
    for (int s = 0; s < mdp.n_states(); ++s) {
      for (int a = 0; a < mdp.n_actions(); ++a) {
        worst = std::max(worst,
                         std::abs(predicted_r[f.index(s, a)] - mdp.r(h, s, a)));
      }
    }
  }
  return worst;
}

void check_linear_mdp(const LinearMdpSpec& spec, double tol) {
  const int d = spec.feature.dim();
  const double root_d = std::sqrt(static_cast<double>(d));
  if (spec.feature.max_norm() > 1.0 + 1e-12) {
    throw InvalidModel("feature norm exceeds 1");
  }
  if (static_cast<int>(spec.mu.size()) != spec.mdp.horizon() ||
      static_cast<int>(spec.theta.size()) != spec.mdp.horizon()) {
    throw InvalidModel("linear MDP needs per-step mu and theta");
  }
  for (int h = 0; h < spec.mdp.horizon(); ++h) {
    if (spec.theta[h].norm() > root_d + 1e-12) {
      throw InvalidModel("|theta_h| exceeds sqrt(d)");
    }
    if (spec.mu[h].rowwise().sum().norm() > root_d + 1e-9) {
      throw InvalidModel("|mu_h(S)| exceeds sqrt(d)");
    }
  }
  const double err = linear_identity_error(spec);
  if (err > tol) {
    throw InvalidModel("linear MDP identities violated by " +
                       std::to_string(err));
  }
}

// ---------------------------------------------------------------------------
// Generators

NChainSpec make_nchain(int n, FeatureKind kind, bool normalized) {
  if (n < 3) throw InvalidSize("N-Chain needs N >= 3");
  constexpr int kLeft = 0;
  constexpr int kRight = 1;
  Matrix p = Matrix::Zero(n * 2, n);
  Matrix r = Matrix::Zero(n, 2);
  for (int s = 0; s < n; ++s) {
    p(s * 2 + kLeft, std::max(s - 1, 0)) = 1.0;
    p(s * 2 + kRight, std::min(s + 1, n - 1)) = 1.0;
  }
  r(0, kLeft) = kNChainSmallReward;
  r(n - 1, kRight) = kNChainLargeReward;
  Vector initial = Vector::Zero(n);
  initial[1] = 1.0;
  NChainSpec out{EpisodicMdp("nchain", n, 2, n + 9, {p}, {r}, initial), {}};
  out.feature = kind == FeatureKind::kThermometer
                    ? make_thermometer_features(n, 2, normalized)
                    : make_one_hot_features(n, 2);
  return out;
}

EpisodicMdp make_riverswim(int n, int horizon, const RiverSwimParams& q) {
  if (n < 2) throw InvalidSize("RiverSwim needs N >= 2");
  if (horizon < 1) throw InvalidSize("RiverSwim needs H >= 1");
  constexpr int kLeft = 0;
  constexpr int kRight = 1;
  Matrix p = Matrix::Zero(n * 2, n);
  Matrix r = Matrix::Zero(n, 2);
  for (int s = 0; s < n; ++s) {
    p(s * 2 + kLeft, std::max(s - 1, 0)) = 1.0;
    const int row = s * 2 + kRight;
    if (s == 0) {
      p(row, 0) += q.first_stay;
      p(row, 1) += q.first_right;
    } else if (s == n - 1) {
      p(row, s) += q.last_stay;
      p(row, s - 1) += q.last_left;
    } else {
      p(row, s + 1) += q.interior_right;
      p(row, s) += q.interior_stay;
      p(row, s - 1) += q.interior_left;
    }
  }
  r(0, kLeft) = q.small_reward;
  r(n - 1, kRight) = q.large_reward;
  Vector initial = Vector::Zero(n);
  initial[0] = 1.0;
  return EpisodicMdp("riverswim", n, 2, horizon, {p}, {r}, initial);
}

LinearMdpSpec make_random_linear_mdp(int n_states, int n_actions, int horizon,
                                     int sparsity, Rng& rng) {
  if (sparsity < 1 || sparsity > n_states) {
    throw InvalidSize("sparsity must lie in [1, n_states]");
  }
  const int d = n_states * n_actions;
  std::vector<Matrix> transitions;
  std::vector<Matrix> rewards;
  std::vector<int> states(n_states);
  for (int h = 0; h < horizon; ++h) {
    Matrix p = Matrix::Zero(d, n_states);
    Matrix r(n_states, n_actions);
    for (int row = 0; row < d; ++row) {
      // Partial Fisher-Yates: the first `sparsity` entries are the support.
      std::iota(states.begin(), states.end(), 0);
      for (int i = 0; i < sparsity; ++i) {
        const int j = i + rng.uniform_int(n_states - i);
        std::swap(states[i], states[j]);
      }
      // Dirichlet(1, ..., 1) as normalized unit exponentials.
      double total = 0.0;
      for (int i = 0; i < sparsity; ++i) {
        const double e = -std::log1p(-rng.uniform());
        p(row, states[i]) = e;
        total += e;
      }
      p.row(row) /= total;
      // Renormalize so rows sum to one up to rounding of a single division.
      p.row(row) /= p.row(row).sum();
    }
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) r(s, a) = rng.uniform();
    }
    transitions.push_back(std::move(p));
    rewards.push_back(std::move(r));
  }
  Vector initial = Vector::Zero(n_states);
  initial[0] = 1.0;
  LinearMdpSpec spec;
  spec.mdp = EpisodicMdp("random_linear", n_states, n_actions, horizon,
                         std::move(transitions), std::move(rewards), initial);
  spec.feature = make_one_hot_features(n_states, n_actions);
  spec.feature.kind = FeatureKind::kTabularLinear;
  for (int h = 0; h < horizon; ++h) {
    // With one-hot features mu_h^{(s,a)} is the transition row itself and
    // theta_h^{(s,a)} is the reward.
    spec.mu.push_back(spec.mdp.transitions(h));
    Vector theta(d);
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        theta[spec.feature.index(s, a)] = spec.mdp.r(h, s, a);
      }
    }
    spec.theta.push_back(std::move(theta));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Simulation

int sample_index(const Eigen::Ref<const Eigen::RowVectorXd>& probs,
                 Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;
}

int EpisodeRunner::reset(Rng& rng) {
  h_ = 0;
  const Vector& init = mdp_->initial();
  state_ = (init.array() == 1.0).any() ? mdp_->initial_state()
                                       : sample_index(init.transpose(), rng);
  return state_;
}

std::pair<int, double> EpisodeRunner::step(int action, Rng& rng) {
  if (done()) throw EpisodeOver("stepped past the horizon");
  if (action < 0 || action >= mdp_->n_actions()) {
    throw InvalidSize("action index out of range");
  }
  const double reward = mdp_->r(h_, state_, action);
  const auto row =
      mdp_->transitions(h_).row(state_ * mdp_->n_actions() + action);
  state_ = sample_index(row, rng);
  ++h_;
  return {state_, reward};
}

void EpisodeRunner::restore(int state, int h) {
  if (state < 0 || state >= mdp_->n_states() || h < 0 ||
      h > mdp_->horizon()) {
    throw InvalidSize("episode position out of range");
  }
  state_ = state;
  h_ = h;
}

// ---------------------------------------------------------------------------
// Planning oracles

int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

// Q_h(s, a) = r_h(s, a) + sum_s' P_h(s'|s,a) next(s').
Matrix backup(const EpisodicMdp& mdp, int h, const Vector& next) {
  const Vector expected = mdp.transitions(h) * next;
  Matrix q = mdp.rewards(h);
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      q(s, a) += expected[s * mdp.n_actions() + a];
    }
  }
  return q;
}

}  // namespace

PlanningSolution value_iteration(const EpisodicMdp& mdp) {
  const int horizon = mdp.horizon();
  PlanningSolution out;
  out.v.assign(horizon + 1, Vector::Zero(mdp.n_states()));
  out.q.resize(horizon);
  out.policy.assign(horizon, std::vector<int>(mdp.n_states(), 0));
  for (int h = horizon - 1; h >= 0; --h) {
    out.q[h] = backup(mdp, h, out.v[h + 1]);
    for (int s = 0; s < mdp.n_states(); ++s) {
      const int a = argmax(out.q[h].row(s));
      out.policy[h][s] = a;
      out.v[h][s] = out.q[h](s, a);
    }
  }
  return out;
}

std::vector<Vector> policy_evaluation(const EpisodicMdp& mdp,
                                      const Policy& policy) {
  if (static_cast<int>(policy.size()) != mdp.horizon()) {
    throw DimensionMismatch("policy must have one row per step");
  }
  std::vector<Vector> v(mdp.horizon() + 1, Vector::Zero(mdp.n_states()));
  for (int h = mdp.horizon() - 1; h >= 0; --h) {
    const Matrix q = backup(mdp, h, v[h + 1]);
    for (int s = 0; s < mdp.n_states(); ++s) v[h][s] = q(s, policy[h].at(s));
  }
  return v;
}

std::vector<Vector> policy_evaluation(const EpisodicMdp& mdp,
                                      const StochasticPolicy& policy) {
  if (static_cast<int>(policy.size()) != mdp.horizon()) {
    throw DimensionMismatch("policy must have one table per step");
  }
  std::vector<Vector> v(mdp.horizon() + 1, Vector::Zero(mdp.n_states()));
  for (int h = mdp.horizon() - 1; h >= 0; --h) {
    const Matrix q = backup(mdp, h, v[h + 1]);
    v[h] = q.cwiseProduct(policy[h]).rowwise().sum();
  }
  return v;
}

// ---------------------------------------------------------------------------
// JSON snapshots

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (int j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw IoError("ragged matrix in JSON");
    }
    for (std::size_t c = 0; c < rows[i].size(); ++c) m(i, c) = rows[i][c];
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const FeatureMap& feature) {
  return {{"kind", to_string(feature.kind)},
          {"n_states", feature.n_states},
          {"n_actions", feature.n_actions},
          {"d", feature.dim()},
          {"table", matrix_to_json(feature.table)}};
}

FeatureMap feature_from_json(const nlohmann::json& j) {
  FeatureMap f;
  f.kind = feature_kind_from_string(j.at("kind").get<std::string>());
  f.n_states = j.at("n_states").get<int>();
  f.n_actions = j.at("n_actions").get<int>();
  f.table = matrix_from_json(j.at("table"));
  return f;
}

nlohmann::json to_json(const EpisodicMdp& mdp) {
  nlohmann::json j;
  j["schema"] = "v1";
  j["name"] = mdp.name();
  j["n_states"] = mdp.n_states();
  j["n_actions"] = mdp.n_actions();
  j["horizon"] = mdp.horizon();
  j["initial"] = std::vector<double>(mdp.initial().data(),
                                     mdp.initial().data() + mdp.n_states());
  j["transitions"] = nlohmann::json::array();
  for (const Matrix& p : mdp.transition_tables()) {
    j["transitions"].push_back(matrix_to_json(p));
  }
  j["rewards"] = nlohmann::json::array();
  for (const Matrix& r : mdp.reward_tables()) {
    j["rewards"].push_back(matrix_to_json(r));
  }
  return j;
}

EpisodicMdp mdp_from_json(const nlohmann::json& j) {
  try {
    std::vector<Matrix> transitions;
    for (const auto& p : j.at("transitions")) {
      transitions.push_back(matrix_from_json(p));
    }
    std::vector<Matrix> rewards;
    for (const auto& r : j.at("rewards")) rewards.push_back(matrix_from_json(r));
    const auto init = j.at("initial").get<std::vector<double>>();
    return EpisodicMdp(j.at("name").get<std::string>(),
                       j.at("n_states").get<int>(),
                       j.at("n_actions").get<int>(), j.at("horizon").get<int>(),
                       std::move(transitions), std::move(rewards),
                       Eigen::Map<const Vector>(init.data(), init.size()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad environment JSON: ") + e.what());
  }
}

}  // namespace lmcrl

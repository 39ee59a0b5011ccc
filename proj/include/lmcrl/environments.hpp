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

#ifndef LMCRL_ENVIRONMENTS_HPP_
#define LMCRL_ENVIRONMENTS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "lmcrl/numerics.hpp"
#include "lmcrl/rng.hpp"

// Step indices are 0-based throughout: h = 0..H-1, and the value cap at step
// h is H - h (the remaining number of steps).

namespace lmcrl {

enum class FeatureKind { kOneHot, kThermometer, kTabularLinear };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

// State-action feature table. Row s * n_actions + a holds phi(s, a).
struct FeatureMap {
  FeatureKind kind = FeatureKind::kOneHot;
  int n_states = 0;
  int n_actions = 0;
  Matrix table;

  int dim() const { return static_cast<int>(table.cols()); }
  int index(int s, int a) const { return s * n_actions + a; }
  Vector phi(int s, int a) const { return table.row(index(s, a)).transpose(); }
  double max_norm() const;
};

// phi(s, a) = e_{s * A + a}.
FeatureMap make_one_hot_features(int n_states, int n_actions);
// phi(s, a) = therm(s) (x) e_a with therm(s)_x = 1{x <= s}, scaled by
// 1/sqrt(n_states) when normalized so that |phi| <= 1.
FeatureMap make_thermometer_features(int n_states, int n_actions,
                                     bool normalized = true);
// Action-free observation vector used as network input.
Vector state_observation(FeatureKind kind, int n_states, int s,
                         bool normalized);

// Finite-horizon tabular MDP. Tables may be stationary (stored once) or
// given per step.
class EpisodicMdp {
 public:
  EpisodicMdp() = default;
  // transitions[h]: (S*A) x S row-stochastic; rewards[h]: S x A in [0, 1].
  // Either vector has size 1 (stationary) or size horizon.
  EpisodicMdp(std::string name, int n_states, int n_actions, int horizon,
              std::vector<Matrix> transitions, std::vector<Matrix> rewards,
              Vector initial);

  const std::string& name() const { return name_; }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int horizon() const { return horizon_; }
  const Vector& initial() const { return initial_; }
  // Most likely initial state (the unique one for point-mass starts).
  int initial_state() const;

  const Matrix& transitions(int h) const;
  const Matrix& rewards(int h) const;
  double p(int h, int s, int a, int next) const {
    return transitions(h)(s * n_actions_ + a, next);
  }
  double r(int h, int s, int a) const { return rewards(h)(s, a); }
  bool stationary() const {
    return transitions_.size() == 1 && rewards_.size() == 1;
  }

  const std::vector<Matrix>& transition_tables() const { return transitions_; }
  const std::vector<Matrix>& reward_tables() const { return rewards_; }

 private:
  void validate() const;

  std::string name_;
  int n_states_ = 0;
  int n_actions_ = 0;
  int horizon_ = 0;
  std::vector<Matrix> transitions_;
  std::vector<Matrix> rewards_;
  Vector initial_;
};

struct LinearMdpSpec {
  EpisodicMdp mdp;
  FeatureMap feature;
  std::vector<Matrix> mu;     // per step, d x S
  std::vector<Vector> theta;  // per step, d
};

// Largest violation of P_h(s'|s,a) = <phi, mu_h(s')> and r_h = <phi, theta_h>.
double linear_identity_error(const LinearMdpSpec& spec);
// Throws InvalidModel unless every linear-MDP invariant holds.
void check_linear_mdp(const LinearMdpSpec& spec, double tol = 1e-10);

struct Transition {
  int h;
  int state;
  int action;
  double reward;
  int next_state;
};

struct Trajectory {
  int episode = 0;
  std::vector<Transition> steps;
};

struct NChainSpec {
  EpisodicMdp mdp;
  FeatureMap feature;
};

inline constexpr double kNChainSmallReward = 0.001;
inline constexpr double kNChainLargeReward = 1.0;

// Chain s_1..s_N, start s_2, actions {0: left, 1: right}, horizon N + 9.
// Left in s_1 pays 0.001 and right in s_N pays 1; both ends self-loop.
NChainSpec make_nchain(int n, FeatureKind kind = FeatureKind::kThermometer,
                       bool normalized = true);

struct RiverSwimParams {
  double interior_right = 0.3;
  double interior_stay = 0.6;
  double interior_left = 0.1;
  double first_stay = 0.7;
  double first_right = 0.3;
  double last_stay = 0.6;
  double last_left = 0.4;
  double small_reward = 0.005;
  double large_reward = 1.0;
};

EpisodicMdp make_riverswim(int n, int horizon,
                           const RiverSwimParams& params = {});

// Non-stationary tabular MDP with `sparsity` next states per (s, a, h),
// Dirichlet(1) weights and U[0,1] rewards, embedded with one-hot features.
LinearMdpSpec make_random_linear_mdp(int n_states, int n_actions, int horizon,
                                     int sparsity, Rng& rng);

// Single-run episode driver.
class EpisodeRunner {
 public:
  explicit EpisodeRunner(const EpisodicMdp& mdp) : mdp_(&mdp) {}

  int reset(Rng& rng);
  // Samples the next state from P_h(.|s,a); throws EpisodeOver past H.
  std::pair<int, double> step(int action, Rng& rng);

  int state() const { return state_; }
  int h() const { return h_; }
  bool done() const { return h_ >= mdp_->horizon(); }
  // Resume mid-episode from a checkpoint.
  void restore(int state, int h);

 private:
  const EpisodicMdp* mdp_;
  int state_ = 0;
  int h_ = 0;
};

int sample_index(const Eigen::Ref<const Eigen::RowVectorXd>& probs, Rng& rng);

// Deterministic Markov policy, indexed [h][s].
using Policy = std::vector<std::vector<int>>;
// Randomized Markov policy, indexed [h] with an S x A probability table.
using StochasticPolicy = std::vector<Matrix>;

struct PlanningSolution {
  std::vector<Vector> v;  // H + 1 entries, v[H] = 0
  std::vector<Matrix> q;  // H entries, S x A
  Policy policy;          // greedy, ties to lowest action
};

PlanningSolution value_iteration(const EpisodicMdp& mdp);
std::vector<Vector> policy_evaluation(const EpisodicMdp& mdp,
                                      const Policy& policy);
std::vector<Vector> policy_evaluation(const EpisodicMdp& mdp,
                                      const StochasticPolicy& policy);

// Lowest-index argmax.
int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& values);

nlohmann::json to_json(const EpisodicMdp& mdp);
nlohmann::json to_json(const FeatureMap& feature);
EpisodicMdp mdp_from_json(const nlohmann::json& j);
FeatureMap feature_from_json(const nlohmann::json& j);

}  // namespace lmcrl

#endif  // LMCRL_ENVIRONMENTS_HPP_

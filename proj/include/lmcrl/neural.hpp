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

#ifndef LMCRL_NEURAL_HPP_
#define LMCRL_NEURAL_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lmcrl/environments.hpp"
#include "lmcrl/numerics.hpp"
#include "lmcrl/rng.hpp"
#include "lmcrl/sgld_optim.hpp"

namespace lmcrl {

// Layer widths [in, hidden..., out]. Parameters live in one flat vector:
// for each layer, the out x in weight matrix (column-major) then the bias.
struct MlpShape {
  std::vector<int> sizes;

  int n_layers() const { return static_cast<int>(sizes.size()) - 1; }
  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int n_params() const;
  int weight_offset(int layer) const;
  int bias_offset(int layer) const;

  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

MlpShape make_qnet_shape(int input_dim, int n_actions,
                         const std::vector<int>& hidden = {32, 32});

// Per-layer view of a parameter set; the unit that flatten/unflatten map.
struct LayeredParams {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

Vector flatten(const LayeredParams& layers);
LayeredParams unflatten(const MlpShape& shape, const Vector& flat);

struct MlpParams {
  MlpShape shape;
  Vector flat;

  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;
  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<Vector> bias(int layer);
};

// He-uniform weights, zero biases.
MlpParams init_mlp(const MlpShape& shape, Rng& rng);

// activations[0] is the input batch, activations[l] the post-ReLU output of
// hidden layer l, and the last entry the linear output layer.
struct ForwardCache {
  std::vector<Matrix> activations;
};

// Batched forward pass; inputs are columns of `x`.
Matrix mlp_forward(const MlpParams& params, const Matrix& x,
                   ForwardCache* cache = nullptr);
Vector mlp_forward(const MlpParams& params, const Vector& obs);

// Reverse-mode gradient of sum_columns <upstream, output> w.r.t. the flat
// parameter vector, using activations stored by the forward pass.
Vector mlp_backward(const MlpParams& params, const ForwardCache& cache,
                    const Matrix& upstream);
// Single-input convenience overload; runs its own forward pass.
Vector mlp_backward(const MlpParams& params, const Vector& obs,
                    const Vector& upstream);

void save_network(std::ostream& out, const MlpParams& params);
MlpParams load_network(std::istream& in);
void save_network(const std::string& path, const MlpParams& params);
MlpParams load_network(const std::string& path);

struct TransitionBatch {
  Matrix obs;       // obs_dim x B
  Matrix next_obs;  // obs_dim x B
  std::vector<int> actions;
  Vector rewards;
  Vector dones;  // 1 for terminal transitions
  int size() const { return static_cast<int>(actions.size()); }
};

// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int obs_dim);

  void add(const Vector& obs, int action, double reward, const Vector& next_obs,
           bool done);
  int size() const { return size_; }
  int capacity() const { return capacity_; }
  // Slot indices drawn uniformly with replacement over occupied slots.
  std::vector<int> sample_indices(int batch, Rng& rng) const;
  TransitionBatch gather(const std::vector<int>& indices) const;
  TransitionBatch sample(int batch, Rng& rng) const;

  void write(std::ostream& out) const;
  static ReplayBuffer read(std::istream& in);

 private:
  int capacity_;
  int obs_dim_;
  int size_ = 0;
  int cursor_ = 0;
  Matrix obs_;
  Matrix next_obs_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> dones_;
};

// y = r + gamma (1 - done) B, with B = max_a Q_target(s', a) or, with
// double_q, Q_target(s', argmax_a Q_online(s', a)).
Vector td_targets(const TransitionBatch& batch, const MlpParams& online,
                  const MlpParams& target, double gamma, bool double_q);

struct DqnTrainConfig {
  double gamma = 0.99;
  int batch_size = 32;
  int target_sync = 100;
  long long total_steps = 100'000;
  int updates_per_step = 4;  // J_k
  int buffer_capacity = 10'000;
  int warmup_steps = 32;
  double eps_start = 1.0;
  double eps_end = 0.01;
  int eps_decay_steps = 1000;
  bool double_q = false;
  std::vector<int> hidden = {32, 32};
};

// Linear decay from eps_start to eps_end over eps_decay_steps, then flat.
double epsilon_at(const DqnTrainConfig& config, long long step);

int act_greedy(const MlpParams& params, const Vector& obs);
int act_epsilon_greedy(const MlpParams& params, const Vector& obs,
                       double epsilon, Rng& rng);

struct TrainMetrics {
  int updates = 0;
  double loss = 0.0;  // mean minibatch loss over the updates
  bool synced = false;
};

enum class NeuralAgentKind { kAdamLmcDqn, kDqn };

// Shared machinery: online/target networks, replay, target sync. Subclasses
// own the optimizer and the behaviour policy.
class DeepQAgent {
 public:
  virtual ~DeepQAgent() = default;

  virtual NeuralAgentKind kind() const = 0;
  // Behaviour action during training.
  virtual int act(const Vector& obs, Rng& rng) = 0;
  int act_greedy(const Vector& obs) const;

  void observe(const Vector& obs, int action, double reward,
               const Vector& next_obs, bool done);
  // J_k updates on fresh minibatches; throws BufferTooSmall if the buffer
  // holds fewer than batch_size transitions.
  TrainMetrics train_step(Rng& rng);

  const MlpParams& online() const { return online_; }
  const MlpParams& target() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const DqnTrainConfig& config() const { return config_; }
  long long env_steps() const { return env_steps_; }
  long long train_calls() const { return train_calls_; }

  // Minibatch MSE loss and its flat gradient w.r.t. the online network.
  double loss_and_grad(const TransitionBatch& batch, Vector& grad) const;

  // Full agent state (networks, optimizer, replay, counters).
  void save(std::ostream& out) const;
  static std::unique_ptr<DeepQAgent> load(std::istream& in);

 protected:
  DeepQAgent(const MlpShape& shape, const DqnTrainConfig& config, Rng& init);

  virtual void apply_update(const Vector& grad, Rng& rng) = 0;
  virtual void write_optimizer(std::ostream& out) const = 0;
  virtual void read_optimizer(std::istream& in) = 0;

  DqnTrainConfig config_;
  MlpParams online_;
  MlpParams target_;
  ReplayBuffer buffer_;
  long long env_steps_ = 0;
  long long train_calls_ = 0;
};

// Algorithm-2 agent: greedy w.r.t. the current sample, aSGLD updates.
class AdamLmcDqnAgent : public DeepQAgent {
 public:
  AdamLmcDqnAgent(const MlpShape& shape, const DqnTrainConfig& config,
                  const AdamSgldHyper& hyper, Rng& init);

  NeuralAgentKind kind() const override { return NeuralAgentKind::kAdamLmcDqn; }
  int act(const Vector& obs, Rng& rng) override;
  const AdamSgldState& optimizer() const { return opt_; }

 protected:
  void apply_update(const Vector& grad, Rng& rng) override;
  void write_optimizer(std::ostream& out) const override;
  void read_optimizer(std::istream& in) override;

 private:
  AdamSgldState opt_;
};

// Epsilon-greedy DQN trained with Adam.
class DqnAgent : public DeepQAgent {
 public:
  DqnAgent(const MlpShape& shape, const DqnTrainConfig& config, double lr,
           Rng& init);

  NeuralAgentKind kind() const override { return NeuralAgentKind::kDqn; }
  int act(const Vector& obs, Rng& rng) override;
  const AdamState& optimizer() const { return opt_; }

 protected:
  void apply_update(const Vector& grad, Rng& rng) override;
  void write_optimizer(std::ostream& out) const override;
  void read_optimizer(std::istream& in) override;

 private:
  AdamState opt_;
};

// Observation columns for every state, obs_dim x n_states.
Matrix observation_table(FeatureKind kind, int n_states, bool normalized);

struct NeuralStep {
  int state;
  int action;
  double reward;
  int next_state;
  bool episode_end;
  double episode_return;  // running return, final when episode_end
  TrainMetrics train;
};

// Step-driven training loop for one agent on one tabular environment. Owns
// the episode state and every random stream, so a saved trainer resumes
// bit-identically.
class NeuralTrainer {
 public:
  NeuralTrainer(const EpisodicMdp& mdp, Matrix observations,
                std::unique_ptr<DeepQAgent> agent, std::uint64_t seed,
                bool timeout_is_terminal = true);

  // One environment step followed by a training call once the replay holds
  // max(batch, warmup) transitions.
  NeuralStep step();
  // Return of one greedy episode on a separate evaluation stream.
  double evaluate();

  long long steps() const { return agent_->env_steps(); }
  const DeepQAgent& agent() const { return *agent_; }

  void save(std::ostream& out) const;
  static NeuralTrainer load(std::istream& in, const EpisodicMdp& mdp,
                            Matrix observations);

 private:
  Vector obs(int s) const { return observations_.col(s); }

  const EpisodicMdp* mdp_;
  Matrix observations_;
  std::unique_ptr<DeepQAgent> agent_;
  EpisodeRunner runner_;
  Rng env_rng_;
  Rng act_rng_;
  Rng train_rng_;
  Rng eval_rng_;
  bool timeout_is_terminal_;
  bool need_reset_ = true;
  double episode_return_ = 0.0;
};

}  // namespace lmcrl

#endif  // LMCRL_NEURAL_HPP_

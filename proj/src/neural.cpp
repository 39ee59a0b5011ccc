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

#include "lmcrl/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "binary_io.hpp"
#include "lmcrl/environments.hpp"
#include "lmcrl/errors.hpp"

namespace lmcrl {

using binary_io::read_pod;
using binary_io::read_vector;
using binary_io::write_pod;
using binary_io::write_vector;

namespace {

constexpr char kNetworkMagic[9] = "LMCRLNET";
constexpr char kAgentMagic[9] = "LMCRLAGT";
constexpr std::uint32_t kFormatVersion = 1;

void write_shape(std::ostream& out, const MlpShape& shape) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(shape.sizes.size()));
  for (int s : shape.sizes) write_pod<std::int32_t>(out, s);
}

MlpShape read_shape(std::istream& in) {
  const auto n = read_pod<std::uint32_t>(in);
  if (n < 2 || n > 64) throw IoError("implausible layer count");
  MlpShape shape;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto s = read_pod<std::int32_t>(in);
    if (s < 1) throw IoError("non-positive layer width");
    shape.sizes.push_back(s);
  }
  return shape;
}

}  // namespace

// ---------------------------------------------------------------------------
// Shape and parameters

int MlpShape::n_params() const { return weight_offset(n_layers()); }

int MlpShape::weight_offset(int layer) const {
  int offset = 0;
  for (int l = 0; l < layer; ++l) offset += sizes[l + 1] * (sizes[l] + 1);
  return offset;
}

int MlpShape::bias_offset(int layer) const {
  return weight_offset(layer) + sizes[layer + 1] * sizes[layer];
}

MlpShape make_qnet_shape(int input_dim, int n_actions,
                         const std::vector<int>& hidden) {
  MlpShape shape;
  shape.sizes.push_back(input_dim);
  shape.sizes.insert(shape.sizes.end(), hidden.begin(), hidden.end());
  shape.sizes.push_back(n_actions);
  return shape;
}

Vector flatten(const LayeredParams& layers) {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < layers.weights.size(); ++l) {
    total += layers.weights[l].size() + layers.biases.at(l).size();
  }
  Vector flat(total);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < layers.weights.size(); ++l) {
    const Matrix& w = layers.weights[l];
    flat.segment(at, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
    at += w.size();
    flat.segment(at, layers.biases[l].size()) = layers.biases[l];
    at += layers.biases[l].size();
  }
  return flat;
}

LayeredParams unflatten(const MlpShape& shape, const Vector& flat) {
  if (flat.size() != shape.n_params()) {
    throw DimensionMismatch("unflatten: parameter count");
  }
  LayeredParams out;
  for (int l = 0; l < shape.n_layers(); ++l) {
    const int rows = shape.sizes[l + 1];
    const int cols = shape.sizes[l];
    out.weights.emplace_back(Eigen::Map<const Matrix>(
        flat.data() + shape.weight_offset(l), rows, cols));
    out.biases.emplace_back(
        Eigen::Map<const Vector>(flat.data() + shape.bias_offset(l), rows));
  }
  return out;
}

Eigen::Map<const Matrix> MlpParams::weight(int layer) const {
  return {flat.data() + shape.weight_offset(layer), shape.sizes[layer + 1],
          shape.sizes[layer]};
}

Eigen::Map<const Vector> MlpParams::bias(int layer) const {
  return {flat.data() + shape.bias_offset(layer), shape.sizes[layer + 1]};
}

Eigen::Map<Matrix> MlpParams::weight(int layer) {
  return {flat.data() + shape.weight_offset(layer), shape.sizes[layer + 1],
          shape.sizes[layer]};
}

Eigen::Map<Vector> MlpParams::bias(int layer) {
  return {flat.data() + shape.bias_offset(layer), shape.sizes[layer + 1]};
}

MlpParams init_mlp(const MlpShape& shape, Rng& rng) {
  MlpParams p{shape, Vector::Zero(shape.n_params())};
  for (int l = 0; l < shape.n_layers(); ++l) {
    const double bound = std::sqrt(6.0 / shape.sizes[l]);
    auto w = p.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
      }
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

Matrix mlp_forward(const MlpParams& params, const Matrix& x,
                   ForwardCache* cache) {
  const MlpShape& shape = params.shape;
  if (x.rows() != shape.input_dim()) {
    throw DimensionMismatch("mlp_forward: input dimension");
  }
  if (cache) {
    cache->activations.resize(shape.n_layers() + 1);
    cache->activations[0] = x;
  }
  Matrix a = x;
  for (int l = 0; l < shape.n_layers(); ++l) {
    Matrix z = params.weight(l) * a;
    z.colwise() += params.bias(l);
    if (l + 1 < shape.n_layers()) z = z.cwiseMax(0.0);
    a = std::move(z);
    if (cache) cache->activations[l + 1] = a;
  }
  return a;
}

Vector mlp_forward(const MlpParams& params, const Vector& obs) {
  return mlp_forward(params, Matrix(obs)).col(0);
}

Vector mlp_backward(const MlpParams& params, const ForwardCache& cache,
                    const Matrix& upstream) {
  const MlpShape& shape = params.shape;
  const int layers = shape.n_layers();
  if (static_cast<int>(cache.activations.size()) != layers + 1) {
    throw InvalidModel("mlp_backward needs a cached forward pass");
  }
  if (upstream.rows() != shape.output_dim() ||
      upstream.cols() != cache.activations[0].cols()) {
    throw DimensionMismatch("mlp_backward: upstream shape");
  }
  Vector grad(shape.n_params());
  Matrix delta = upstream;
  for (int l = layers - 1; l >= 0; --l) {
    const Matrix& input = cache.activations[l];
    Eigen::Map<Matrix>(grad.data() + shape.weight_offset(l), shape.sizes[l + 1],
                       shape.sizes[l])
        .noalias() = delta * input.transpose();
    Eigen::Map<Vector>(grad.data() + shape.bias_offset(l), shape.sizes[l + 1]) =
        delta.rowwise().sum();
    if (l > 0) {
      Matrix back = params.weight(l).transpose() * delta;
      // ReLU gate: the cached post-activation is positive iff the unit fired.
      delta = back.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

Vector mlp_backward(const MlpParams& params, const Vector& obs,
                    const Vector& upstream) {
  ForwardCache cache;
  mlp_forward(params, Matrix(obs), &cache);
  return mlp_backward(params, cache, Matrix(upstream));
}

void save_network(std::ostream& out, const MlpParams& params) {
  out.write(kNetworkMagic, 8);
  write_pod(out, kFormatVersion);
  write_shape(out, params.shape);
  write_vector(out, params.flat);
  if (!out) throw IoError("failed to write network");
}

MlpParams load_network(std::istream& in) {
  binary_io::expect_magic(in, kNetworkMagic);
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw IoError("unsupported network format version " +
                  std::to_string(version));
  }
  MlpParams p;
  p.shape = read_shape(in);
  p.flat = read_vector(in);
  if (p.flat.size() != p.shape.n_params()) {
    throw IoError("parameter count does not match layer sizes");
  }
  return p;
}

void save_network(const std::string& path, const MlpParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  save_network(out, params);
}

MlpParams load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load_network(in);
}

// ---------------------------------------------------------------------------
// Replay

ReplayBuffer::ReplayBuffer(int capacity, int obs_dim)
    : capacity_(capacity),
      obs_dim_(obs_dim),
      obs_(obs_dim, capacity),
      next_obs_(obs_dim, capacity),
      actions_(capacity),
      rewards_(capacity),
      dones_(capacity) {
  if (capacity < 1 || obs_dim < 1) throw InvalidSize("replay buffer shape");
}

void ReplayBuffer::add(const Vector& obs, int action, double reward,
                       const Vector& next_obs, bool done) {
  if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_) {
    throw DimensionMismatch("replay observation dimension");
  }
  obs_.col(cursor_) = obs;
  next_obs_.col(cursor_) = next_obs;
  actions_[cursor_] = action;
  rewards_[cursor_] = reward;
  dones_[cursor_] = done ? 1 : 0;
  cursor_ = (cursor_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

std::vector<int> ReplayBuffer::sample_indices(int batch, Rng& rng) const {
  if (size_ == 0) throw BufferTooSmall("cannot sample an empty buffer");
  std::vector<int> idx(batch);
  for (int& i : idx) i = rng.uniform_int(size_);
  return idx;
}

TransitionBatch ReplayBuffer::gather(const std::vector<int>& indices) const {
  const int n = static_cast<int>(indices.size());
  TransitionBatch b;
  b.obs.resize(obs_dim_, n);
  b.next_obs.resize(obs_dim_, n);
  b.actions.resize(n);
  b.rewards.resize(n);
  b.dones.resize(n);
  for (int k = 0; k < n; ++k) {
    const int i = indices[k];
    b.obs.col(k) = obs_.col(i);
    b.next_obs.col(k) = next_obs_.col(i);
    b.actions[k] = actions_[i];
    b.rewards[k] = rewards_[i];
    b.dones[k] = dones_[i];
  }
  return b;
}

TransitionBatch ReplayBuffer::sample(int batch, Rng& rng) const {
  return gather(sample_indices(batch, rng));
}

void ReplayBuffer::write(std::ostream& out) const {
  write_pod<std::int32_t>(out, capacity_);
  write_pod<std::int32_t>(out, obs_dim_);
  write_pod<std::int32_t>(out, size_);
  write_pod<std::int32_t>(out, cursor_);
  for (int i = 0; i < size_; ++i) {
    write_vector(out, obs_.col(i));
    write_vector(out, next_obs_.col(i));
    write_pod<std::int32_t>(out, actions_[i]);
    write_pod<double>(out, rewards_[i]);
    write_pod<std::uint8_t>(out, dones_[i]);
  }
}

ReplayBuffer ReplayBuffer::read(std::istream& in) {
  const auto capacity = read_pod<std::int32_t>(in);
  const auto obs_dim = read_pod<std::int32_t>(in);
  ReplayBuffer b(capacity, obs_dim);
  b.size_ = read_pod<std::int32_t>(in);
  b.cursor_ = read_pod<std::int32_t>(in);
  if (b.size_ < 0 || b.size_ > capacity || b.cursor_ < 0 ||
      b.cursor_ >= capacity) {
    throw IoError("corrupt replay buffer header");
  }
  for (int i = 0; i < b.size_; ++i) {
    b.obs_.col(i) = read_vector(in);
    b.next_obs_.col(i) = read_vector(in);
    b.actions_[i] = read_pod<std::int32_t>(in);
    b.rewards_[i] = read_pod<double>(in);
    b.dones_[i] = read_pod<std::uint8_t>(in);
  }
  return b;
}

// ---------------------------------------------------------------------------
// TD targets and action selection

Vector td_targets(const TransitionBatch& batch, const MlpParams& online,
                  const MlpParams& target, double gamma, bool double_q) {
  if (batch.size() == 0) throw InvalidSize("td_targets on an empty batch");
  const Matrix q_target = mlp_forward(target, batch.next_obs);
  Matrix q_online;
  if (double_q) q_online = mlp_forward(online, batch.next_obs);
  Vector y(batch.size());
  for (int i = 0; i < batch.size(); ++i) {
    double bootstrap;
    if (double_q) {
      bootstrap = q_target(argmax(q_online.col(i).transpose()), i);
    } else {
      bootstrap = q_target.col(i).maxCoeff();
    }
    y[i] = batch.rewards[i] + gamma * (1.0 - batch.dones[i]) * bootstrap;
  }
  return y;
}

double epsilon_at(const DqnTrainConfig& c, long long step) {
  if (c.eps_decay_steps <= 0 || step >= c.eps_decay_steps) return c.eps_end;
  const double frac = static_cast<double>(step) / c.eps_decay_steps;
  return c.eps_start + frac * (c.eps_end - c.eps_start);
}

int act_greedy(const MlpParams& params, const Vector& obs) {
  return argmax(mlp_forward(params, obs).transpose());
}

int act_epsilon_greedy(const MlpParams& params, const Vector& obs,
                       double epsilon, Rng& rng) {
  if (rng.uniform() < epsilon) return rng.uniform_int(params.shape.output_dim());
  return act_greedy(params, obs);
}

// ---------------------------------------------------------------------------
// Agents

DeepQAgent::DeepQAgent(const MlpShape& shape, const DqnTrainConfig& config,
                       Rng& init)
    : config_(config),
      online_(init_mlp(shape, init)),
      target_(online_),
      buffer_(config.buffer_capacity, shape.input_dim()) {
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) {
    throw ConfigError("gamma must lie in (0, 1]");
  }
  if (config.batch_size < 1 || config.target_sync < 1 ||
      config.updates_per_step < 1) {
    throw ConfigError("batch size, sync period and J_k must be positive");
  }
}

int DeepQAgent::act_greedy(const Vector& obs) const {
  return lmcrl::act_greedy(online_, obs);
}

void DeepQAgent::observe(const Vector& obs, int action, double reward,
                         const Vector& next_obs, bool done) {
  buffer_.add(obs, action, reward, next_obs, done);
  ++env_steps_;
}

double DeepQAgent::loss_and_grad(const TransitionBatch& batch,
                                 Vector& grad) const {
  const Vector y =
      td_targets(batch, online_, target_, config_.gamma, config_.double_q);
  ForwardCache cache;
  const Matrix q = mlp_forward(online_, batch.obs, &cache);
  const int n = batch.size();
  Matrix upstream = Matrix::Zero(q.rows(), n);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double diff = q(batch.actions[i], i) - y[i];
    loss += diff * diff;
    upstream(batch.actions[i], i) = 2.0 * diff / n;
  }
  grad = mlp_backward(online_, cache, upstream);
  return loss / n;
}

TrainMetrics DeepQAgent::train_step(Rng& rng) {
  if (buffer_.size() < config_.batch_size) {
    throw BufferTooSmall("replay holds " + std::to_string(buffer_.size()) +
                         " < batch " + std::to_string(config_.batch_size));
  }
  TrainMetrics metrics;
  Vector grad;
  for (int j = 0; j < config_.updates_per_step; ++j) {
    const TransitionBatch batch = buffer_.sample(config_.batch_size, rng);
    metrics.loss += loss_and_grad(batch, grad);
    apply_update(grad, rng);
    ++metrics.updates;
  }
  metrics.loss /= metrics.updates;
  ++train_calls_;
  if (train_calls_ % config_.target_sync == 0) {
    target_.flat = online_.flat;
    metrics.synced = true;
  }
  return metrics;
}

void DeepQAgent::save(std::ostream& out) const {
  out.write(kAgentMagic, 8);
  write_pod(out, kFormatVersion);
  write_pod<std::int32_t>(out, static_cast<std::int32_t>(kind()));
  write_pod(out, config_.gamma);
  write_pod<std::int32_t>(out, config_.batch_size);
  write_pod<std::int32_t>(out, config_.target_sync);
  write_pod<std::int64_t>(out, config_.total_steps);
  write_pod<std::int32_t>(out, config_.updates_per_step);
  write_pod<std::int32_t>(out, config_.buffer_capacity);
  write_pod<std::int32_t>(out, config_.warmup_steps);
  write_pod(out, config_.eps_start);
  write_pod(out, config_.eps_end);
  write_pod<std::int32_t>(out, config_.eps_decay_steps);
  write_pod<std::uint8_t>(out, config_.double_q ? 1 : 0);
  write_shape(out, online_.shape);
  write_vector(out, online_.flat);
  write_vector(out, target_.flat);
  buffer_.write(out);
  write_pod<std::int64_t>(out, env_steps_);
  write_pod<std::int64_t>(out, train_calls_);
  write_optimizer(out);
  if (!out) throw IoError("failed to write agent checkpoint");
}

std::unique_ptr<DeepQAgent> DeepQAgent::load(std::istream& in) {
  binary_io::expect_magic(in, kAgentMagic);
  if (read_pod<std::uint32_t>(in) != kFormatVersion) {
    throw IoError("unsupported agent checkpoint version");
  }
  const auto kind = static_cast<NeuralAgentKind>(read_pod<std::int32_t>(in));
  DqnTrainConfig c;
  c.gamma = read_pod<double>(in);
  c.batch_size = read_pod<std::int32_t>(in);
  c.target_sync = read_pod<std::int32_t>(in);
  c.total_steps = read_pod<std::int64_t>(in);
  c.updates_per_step = read_pod<std::int32_t>(in);
  c.buffer_capacity = read_pod<std::int32_t>(in);
  c.warmup_steps = read_pod<std::int32_t>(in);
  c.eps_start = read_pod<double>(in);
  c.eps_end = read_pod<double>(in);
  c.eps_decay_steps = read_pod<std::int32_t>(in);
  c.double_q = read_pod<std::uint8_t>(in) != 0;
  const MlpShape shape = read_shape(in);
  c.hidden.assign(shape.sizes.begin() + 1, shape.sizes.end() - 1);

  Rng scratch(0);
  std::unique_ptr<DeepQAgent> agent;
  if (kind == NeuralAgentKind::kAdamLmcDqn) {
    agent = std::make_unique<AdamLmcDqnAgent>(shape, c, AdamSgldHyper{}, scratch);
  } else if (kind == NeuralAgentKind::kDqn) {
    agent = std::make_unique<DqnAgent>(shape, c, 1e-3, scratch);
  } else {
    throw IoError("unknown agent kind in checkpoint");
  }
  agent->online_.flat = read_vector(in);
  agent->target_.flat = read_vector(in);
  if (agent->online_.flat.size() != shape.n_params() ||
      agent->target_.flat.size() != shape.n_params()) {
    throw IoError("checkpoint parameter count mismatch");
  }
  agent->buffer_ = ReplayBuffer::read(in);
  agent->env_steps_ = read_pod<std::int64_t>(in);
  agent->train_calls_ = read_pod<std::int64_t>(in);
  agent->read_optimizer(in);
  return agent;
}

AdamLmcDqnAgent::AdamLmcDqnAgent(const MlpShape& shape,
                                 const DqnTrainConfig& config,
                                 const AdamSgldHyper& hyper, Rng& init)
    : DeepQAgent(shape, config, init), opt_(Vector(), hyper) {
  opt_.m = Vector::Zero(online_.flat.size());
  opt_.v = Vector::Zero(online_.flat.size());
}

int AdamLmcDqnAgent::act(const Vector& obs, Rng&) { return act_greedy(obs); }

void AdamLmcDqnAgent::apply_update(const Vector& grad, Rng& rng) {
  // The optimizer owns the parameters only for the duration of the step.
  std::swap(opt_.w, online_.flat);
  asgld_step(opt_, grad, rng);
  std::swap(opt_.w, online_.flat);
}

void AdamLmcDqnAgent::write_optimizer(std::ostream& out) const {
  const AdamSgldHyper& h = opt_.hyper;
  for (double x : {h.eta, h.beta, h.a, h.alpha1, h.alpha2, h.lambda1}) {
    write_pod(out, x);
  }
  write_vector(out, opt_.m);
  write_vector(out, opt_.v);
}

void AdamLmcDqnAgent::read_optimizer(std::istream& in) {
  AdamSgldHyper& h = opt_.hyper;
  for (double* x : {&h.eta, &h.beta, &h.a, &h.alpha1, &h.alpha2, &h.lambda1}) {
    *x = read_pod<double>(in);
  }
  opt_.m = read_vector(in);
  opt_.v = read_vector(in);
}

DqnAgent::DqnAgent(const MlpShape& shape, const DqnTrainConfig& config,
                   double lr, Rng& init)
    : DeepQAgent(shape, config, init), opt_(Vector(), lr) {
  opt_.m = Vector::Zero(online_.flat.size());
  opt_.v = Vector::Zero(online_.flat.size());
}

int DqnAgent::act(const Vector& obs, Rng& rng) {
  return act_epsilon_greedy(online_, obs, epsilon_at(config_, env_steps_), rng);
}

void DqnAgent::apply_update(const Vector& grad, Rng&) {
  std::swap(opt_.w, online_.flat);
  adam_step(opt_, grad);
  std::swap(opt_.w, online_.flat);
}

void DqnAgent::write_optimizer(std::ostream& out) const {
  for (double x : {opt_.lr, opt_.beta1, opt_.beta2, opt_.eps}) write_pod(out, x);
  write_pod<std::int64_t>(out, opt_.t);
  write_vector(out, opt_.m);
  write_vector(out, opt_.v);
}

void DqnAgent::read_optimizer(std::istream& in) {
  for (double* x : {&opt_.lr, &opt_.beta1, &opt_.beta2, &opt_.eps}) {
    *x = read_pod<double>(in);
  }
  opt_.t = read_pod<std::int64_t>(in);
  opt_.m = read_vector(in);
  opt_.v = read_vector(in);
}

// ---------------------------------------------------------------------------
// Training loop

Matrix observation_table(FeatureKind kind, int n_states, bool normalized) {
  Matrix table(n_states, n_states);
  for (int s = 0; s < n_states; ++s) {
    table.col(s) = state_observation(kind, n_states, s, normalized);
  }
  return table;
}

NeuralTrainer::NeuralTrainer(const EpisodicMdp& mdp, Matrix observations,
                             std::unique_ptr<DeepQAgent> agent,
                             std::uint64_t seed, bool timeout_is_terminal)
    : mdp_(&mdp),
      observations_(std::move(observations)),
      agent_(std::move(agent)),
      runner_(mdp),
      env_rng_(derive_seed(seed, 1)),
      act_rng_(derive_seed(seed, 2)),
      train_rng_(derive_seed(seed, 3)),
      eval_rng_(derive_seed(seed, 4)),
      timeout_is_terminal_(timeout_is_terminal) {
  if (observations_.cols() != mdp.n_states() ||
      observations_.rows() != agent_->online().shape.input_dim()) {
    throw DimensionMismatch("observation table does not match agent/env");
  }
}

NeuralStep NeuralTrainer::step() {
  if (need_reset_) {
    runner_.reset(env_rng_);
    episode_return_ = 0.0;
    need_reset_ = false;
  }
  NeuralStep out{};
  out.state = runner_.state();
  const Vector o = obs(out.state);
  out.action = agent_->act(o, act_rng_);
  const auto [next, reward] = runner_.step(out.action, env_rng_);
  out.reward = reward;
  out.next_state = next;
  out.episode_end = runner_.done();
  agent_->observe(o, out.action, reward, obs(next),
                  out.episode_end && timeout_is_terminal_);
  const auto& cfg = agent_->config();
  if (agent_->buffer().size() >= std::max(cfg.batch_size, cfg.warmup_steps)) {
    out.train = agent_->train_step(train_rng_);
  }
  episode_return_ += reward;
  out.episode_return = episode_return_;
  if (out.episode_end) need_reset_ = true;
  return out;
}

double NeuralTrainer::evaluate() {
  EpisodeRunner runner(*mdp_);
  runner.reset(eval_rng_);
  double total = 0.0;
  while (!runner.done()) {
    total += runner.step(agent_->act_greedy(obs(runner.state())), eval_rng_)
                 .second;
  }
  return total;
}

void NeuralTrainer::save(std::ostream& out) const {
  agent_->save(out);
  for (const Rng* r : {&env_rng_, &act_rng_, &train_rng_, &eval_rng_}) {
    binary_io::write_string(out, r->serialize());
  }
  write_pod<std::uint8_t>(out, timeout_is_terminal_ ? 1 : 0);
  write_pod<std::uint8_t>(out, need_reset_ ? 1 : 0);
  write_pod<double>(out, episode_return_);
  write_pod<std::int32_t>(out, runner_.state());
  write_pod<std::int32_t>(out, runner_.h());
  if (!out) throw IoError("failed to write trainer checkpoint");
}

NeuralTrainer NeuralTrainer::load(std::istream& in, const EpisodicMdp& mdp,
                                  Matrix observations) {
  auto agent = DeepQAgent::load(in);
  NeuralTrainer t(mdp, std::move(observations), std::move(agent), 0);
  for (Rng* r : {&t.env_rng_, &t.act_rng_, &t.train_rng_, &t.eval_rng_}) {
    *r = Rng::deserialize(binary_io::read_string(in));
  }
  t.timeout_is_terminal_ = read_pod<std::uint8_t>(in) != 0;
  t.need_reset_ = read_pod<std::uint8_t>(in) != 0;
  t.episode_return_ = read_pod<double>(in);
  const int state = read_pod<std::int32_t>(in);
  const int h = read_pod<std::int32_t>(in);
  t.runner_.restore(state, h);
  return t;
}

}  // namespace lmcrl

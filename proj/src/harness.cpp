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

#include "lmcrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "lmcrl/errors.hpp"

namespace lmcrl {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const std::vector<std::string>& linear_agents() {
  static const std::vector<std::string> names = {
      "lmc_lsvi", "lsvi_ucb", "lsvi_phe", "oracle", "first_action"};
  return names;
}

const std::vector<std::string>& neural_agents() {
  static const std::vector<std::string> names = {"adam_lmcdqn", "dqn"};
  return names;
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

Policy greedy_policy(const std::vector<Matrix>& q) {
  Policy pi(q.size());
  for (std::size_t h = 0; h < q.size(); ++h) {
    pi[h].resize(q[h].rows());
    for (int s = 0; s < q[h].rows(); ++s) pi[h][s] = argmax(q[h].row(s));
  }
  return pi;
}

void check_exact_budget(const EpisodicMdp& mdp) {
  const long long cost = static_cast<long long>(mdp.n_states()) *
                         mdp.n_states() * mdp.n_actions() * mdp.horizon();
  if (cost > kExactEvalBudget) {
    throw InfeasibleExact("model too large for exact policy evaluation");
  }
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}

RunRecord run_linear(const RunConfig& config, const EnvInstance& env,
                     std::uint64_t seed) {
  const EpisodicMdp& mdp = env.mdp;
  check_exact_budget(mdp);
  const int episodes = static_cast<int>(config.get_int("episodes", 0));
  auto agent = make_linear_agent(config, env, stream_seed(seed, SeedStream::kAgent));
  const PlanningSolution star = value_iteration(mdp);
  Rng env_rng(stream_seed(seed, SeedStream::kEnv));
  EpisodeRunner runner(mdp);

  RunRecord rec;
  rec.fingerprint = config.fingerprint();
  rec.agent = agent->name();
  rec.seed = seed;
  rec.rows.reserve(episodes);
  double cum = 0.0;
  long long steps = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 1; k <= episodes; ++k) {
    agent->plan();
    const Policy pi = greedy_policy(agent->q_tables());
    int s = runner.reset(env_rng);
    const double value = policy_evaluation(mdp, pi)[0][s];
    EpisodeRow row;
    row.k = k;
    row.value = value;
    // Exact evaluation can undershoot V* only by rounding.
    row.regret = std::max(0.0, star.v[0][s] - value);
    for (int h = 0; h < mdp.horizon(); ++h) {
      const int a = pi[h][s];
      const auto [next, r] = runner.step(a, env_rng);
      agent->record(h, s, a, r, next);
      row.ret += r;
      s = next;
    }
    steps += mdp.horizon();
    cum += row.regret;
    row.cum_regret = cum;
    row.steps = steps;
    row.wall_ms = elapsed_ms(t0);
    rec.rows.push_back(row);
  }
  return rec;
}

RunRecord run_neural(const RunConfig& config, const EnvInstance& env,
                     std::uint64_t seed) {
  const std::string name = config.get("agent");
  const int n = env.mdp.n_states();
  const FeatureKind kind = feature_kind_from_string(
      config.get("env.features", "thermometer"));
  Matrix obs = observation_table(kind, n, config.get_bool("env.normalized", true));

  DqnTrainConfig cfg;
  cfg.gamma = config.get_double("agent.gamma", cfg.gamma);
  cfg.batch_size = static_cast<int>(config.get_int("agent.batch", cfg.batch_size));
  cfg.target_sync =
      static_cast<int>(config.get_int("agent.target_sync", cfg.target_sync));
  cfg.total_steps = config.get_int("steps", cfg.total_steps);
  cfg.updates_per_step =
      static_cast<int>(config.get_int("agent.J", cfg.updates_per_step));
  cfg.buffer_capacity =
      static_cast<int>(config.get_int("agent.buffer", cfg.buffer_capacity));
  cfg.double_q = config.get_bool("agent.double_q", cfg.double_q);
  cfg.hidden.clear();
  for (const auto& w : split_list(config.get("agent.hidden", "32,32"))) {
    cfg.hidden.push_back(std::stoi(w));
  }
  const double lr = config.get_double("agent.lr", 1e-3);

  Rng init(derive_seed(seed, 5));
  const MlpShape shape =
      make_qnet_shape(static_cast<int>(obs.rows()), env.mdp.n_actions(), cfg.hidden);
  std::unique_ptr<DeepQAgent> agent;
  if (name == "adam_lmcdqn") {
    AdamSgldHyper hyper;
    hyper.eta = lr;
    hyper.a = config.get_double("agent.a", 1.0);
    hyper.beta = config.get_double("agent.beta", 1e8);
    agent = std::make_unique<AdamLmcDqnAgent>(shape, cfg, hyper, init);
  } else {
    agent = std::make_unique<DqnAgent>(shape, cfg, lr, init);
  }
  NeuralTrainer trainer(env.mdp, std::move(obs), std::move(agent), seed,
                        config.get_bool("agent.timeout_terminal", true));

  RunRecord rec;
  rec.fingerprint = config.fingerprint();
  rec.agent = name;
  rec.seed = seed;
  rec.neural = true;
  const long long every = config.get_int("eval_every", 1000);
  if (every < 1) throw ConfigError("eval_every must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  for (long long t = 1; t <= cfg.total_steps; ++t) {
    trainer.step();
    if (t % every == 0) {
      EpisodeRow row;
      row.k = static_cast<int>(rec.rows.size()) + 1;
      row.steps = t;
      row.ret = trainer.evaluate();
      row.value = row.ret;
      row.wall_ms = elapsed_ms(t0);
      rec.rows.push_back(row);
    }
  }
  return rec;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t stream_seed(std::uint64_t master, SeedStream stream) {
  return derive_seed(master, static_cast<std::uint64_t>(stream));
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig config;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("expected key=value, got '" + assignment + "'");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("empty key in '" + assignment + "'");
  set(key, trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

std::string RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string RunConfig::get(const std::string& key,
                           const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw ConfigError("'" + key + "' is not a number: '" + v + "'");
  }
  return x;
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw ConfigError("'" + key + "' is not an integer: '" + v + "'");
  }
  return x;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' is not a boolean: '" + v + "'");
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string RunConfig::identity() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (k != "seed") out += k + "=" + v + "\n";
  }
  return out;
}

std::string RunConfig::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(identity())));
  return buf;
}

void RunConfig::validate() const {
  const std::string env = get("env");
  if (env != "nchain" && env != "riverswim" && env != "linear_mdp") {
    throw ConfigError("unknown env '" + env + "'");
  }
  const std::string agent = get("agent");
  if (!contains(linear_agents(), agent) && !contains(neural_agents(), agent)) {
    throw ConfigError("unknown agent '" + agent + "'");
  }
  if (!has("seed")) throw ConfigError("seed must be given explicitly");
  if (get_int("seed", 0) < 0) throw ConfigError("seed must be non-negative");
  if (is_neural_agent(agent)) {
    if (get_int("steps", 100'000) < 1) throw ConfigError("steps must be positive");
  } else if (get_int("episodes", 0) < 1) {
    throw ConfigError("episodes must be positive");
  }
}

EnvInstance make_env(const RunConfig& config) {
  const std::string name = config.get("env");
  const FeatureKind kind =
      feature_kind_from_string(config.get("env.features", "thermometer"));
  const bool normalized = config.get_bool("env.normalized", true);
  if (name == "nchain") {
    const int n = static_cast<int>(config.get_int("env.n", 10));
    NChainSpec spec = make_nchain(n, kind, normalized);
    return {std::move(spec.mdp), std::move(spec.feature)};
  }
  if (name == "riverswim") {
    const int n = static_cast<int>(config.get_int("env.n", 6));
    const int horizon = static_cast<int>(config.get_int("env.horizon", 20));
    EpisodicMdp mdp = make_riverswim(n, horizon);
    return {mdp, make_one_hot_features(n, 2)};
  }
  if (name == "linear_mdp") {
    Rng rng(stream_seed(config.get_int("env.instance", 0), SeedStream::kInstance));
    LinearMdpSpec spec = make_random_linear_mdp(
        static_cast<int>(config.get_int("env.states", 10)),
        static_cast<int>(config.get_int("env.actions", 4)),
        static_cast<int>(config.get_int("env.horizon", 20)),
        static_cast<int>(config.get_int("env.sparsity", 3)), rng);
    return {std::move(spec.mdp), std::move(spec.feature)};
  }
  throw ConfigError("unknown env '" + name + "'");
}

bool is_neural_agent(const std::string& name) {
  return contains(neural_agents(), name);
}

LmcSchedule lmc_schedule_from_config(const RunConfig& config) {
  LmcSchedule s;
  s.lambda = config.get_double("agent.lambda", s.lambda);
  if (config.get("agent.eta", "auto") == "auto") {
    s.eta_mode = ScheduleMode::kAuto;
  } else {
    s.eta_mode = ScheduleMode::kFixed;
    s.eta = config.get_double("agent.eta", 0.0);
  }
  s.eta_scale = config.get_double("agent.eta_scale", s.eta_scale);
  const std::string beta = config.get("agent.beta", "1");
  if (beta == "auto" || beta == "theory") {
    s.beta_mode = ScheduleMode::kAuto;
    s.full_beta_constant = beta == "theory";
  } else {
    s.beta_mode = ScheduleMode::kFixed;
    s.beta = config.get_double("agent.beta", s.beta);
  }
  s.beta_scale = config.get_double("agent.beta_scale", s.beta_scale);
  if (config.get("agent.J", "1") == "auto") {
    s.j_mode = ScheduleMode::kAuto;
  } else {
    s.j_mode = ScheduleMode::kFixed;
    s.J = static_cast<int>(config.get_int("agent.J", s.J));
  }
  if (config.get("agent.M", "1") == "auto") {
    s.auto_m = true;
  } else {
    s.M = static_cast<int>(config.get_int("agent.M", s.M));
  }
  s.delta = config.get_double("agent.delta", s.delta);
  s.validate();
  return s;
}

std::unique_ptr<LinearAgent> make_linear_agent(const RunConfig& config,
                                               const EnvInstance& env,
                                               std::uint64_t seed) {
  const std::string name = config.get("agent");
  const int horizon = env.mdp.horizon();
  if (name == "lmc_lsvi") {
    const LinearDims dims{horizon,
                          static_cast<int>(config.get_int("episodes", 1)),
                          env.feature.dim()};
    return std::make_unique<LmcLsviAgent>(env.feature, dims,
                                          lmc_schedule_from_config(config), seed);
  }
  if (name == "lsvi_ucb") {
    UcbConfig c;
    c.bonus = config.get_double("agent.bonus", c.bonus);
    c.lambda = config.get_double("agent.lambda", c.lambda);
    return std::make_unique<LsviUcbAgent>(env.feature, horizon, c);
  }
  if (name == "lsvi_phe") {
    PheConfig c;
    c.M = static_cast<int>(config.get_int("agent.M", c.M));
    c.sigma = config.get_double("agent.sigma", c.sigma);
    c.lambda = config.get_double("agent.lambda", c.lambda);
    return std::make_unique<LsviPheAgent>(env.feature, horizon, c, seed);
  }
  if (name == "oracle") {
    return std::make_unique<TableAgent>(make_oracle_agent(env.mdp));
  }
  if (name == "first_action") {
    return std::make_unique<TableAgent>(make_first_action_agent(env.mdp));
  }
  throw ConfigError("'" + name + "' is not a linear agent");
}

double RunRecord::final_metric() const {
  if (rows.empty()) return 0.0;
  const std::size_t n = std::min<std::size_t>(10, rows.size());
  double sum = 0.0;
  for (std::size_t i = rows.size() - n; i < rows.size(); ++i) sum += rows[i].value;
  return sum / static_cast<double>(n);
}

RunRecord run_experiment(const RunConfig& config) {
  config.validate();
  const EnvInstance env = make_env(config);
  const auto seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
  if (is_neural_agent(config.get("agent"))) return run_neural(config, env, seed);
  return run_linear(config, env, seed);
}

namespace {

template <class P>
RegretCurve regret_curve(const EpisodicMdp& mdp, const std::vector<P>& policies,
                         const std::vector<int>& starts) {
  if (policies.size() != starts.size()) {
    throw DimensionMismatch("one start state per policy");
  }
  check_exact_budget(mdp);
  const PlanningSolution star = value_iteration(mdp);
  RegretCurve curve;
  double cum = 0.0;
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const int s = starts[k];
    const double gap = std::max(
        0.0, star.v[0][s] - policy_evaluation(mdp, policies[k])[0][s]);
    cum += gap;
    curve.per_episode.push_back(gap);
    curve.cumulative.push_back(cum);
  }
  return curve;
}

}  // namespace

RegretCurve compute_regret(const EpisodicMdp& mdp,
                           const std::vector<Policy>& policies,
                           const std::vector<int>& starts) {
  return regret_curve(mdp, policies, starts);
}

RegretCurve compute_regret(const EpisodicMdp& mdp,
                           const std::vector<StochasticPolicy>& policies,
                           const std::vector<int>& starts) {
  return regret_curve(mdp, policies, starts);
}

SweepResult sweep(const RunConfig& grid, int threads) {
  RunConfig base;
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::vector<std::string> seeds = {"1"};
  for (const auto& [k, v] : grid.values()) {
    if (k.rfind("grid.", 0) == 0) {
      auto values = split_list(v);
      if (values.empty()) throw ConfigError("empty grid axis " + k);
      axes.emplace_back(k.substr(5), std::move(values));
    } else if (k == "seeds") {
      seeds = split_list(v);
      if (seeds.empty()) throw ConfigError("empty seed list");
    } else {
      base.set(k, v);
    }
  }

  // Cartesian product, last axis fastest.
  std::vector<std::map<std::string, std::string>> cells(1);
  for (const auto& [key, values] : axes) {
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& cell : cells) {
      for (const auto& v : values) {
        auto c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }

  std::vector<RunConfig> jobs;
  for (const auto& cell : cells) {
    for (const auto& seed : seeds) {
      RunConfig c = base;
      for (const auto& [k, v] : cell) c.set(k, v);
      c.set("seed", seed);
      c.validate();
      jobs.push_back(std::move(c));
    }
  }

  // Each job owns every random stream it touches; results land by index.
  std::vector<RunRecord> records(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        records[i] = run_experiment(jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SweepResult result;
  const std::size_t per = seeds.size();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SweepCell cell;
    cell.assignment = cells[c];
    double sum = 0.0;
    for (std::size_t s = 0; s < per; ++s) {
      cell.runs.push_back(std::move(records[c * per + s]));
      sum += cell.runs.back().final_metric();
    }
    cell.mean = sum / static_cast<double>(per);
    if (per > 1) {
      double ss = 0.0;
      for (const auto& r : cell.runs) {
        ss += (r.final_metric() - cell.mean) * (r.final_metric() - cell.mean);
      }
      cell.std_error = std::sqrt(ss / static_cast<double>(per - 1) /
                                 static_cast<double>(per));
    }
    if (result.best < 0 || cell.mean > result.cells[result.best].mean) {
      result.best = static_cast<int>(c);
    }
    result.cells.push_back(std::move(cell));
  }
  return result;
}

PosteriorFixture PosteriorFixture::from_config(const RunConfig& config) {
  PosteriorFixture f;
  f.d = static_cast<int>(config.get_int("d", f.d));
  f.episodes = static_cast<int>(config.get_int("episodes", f.episodes));
  f.points_per_episode =
      static_cast<int>(config.get_int("points_per_episode", f.points_per_episode));
  f.lambda = config.get_double("lambda", f.lambda);
  f.J = static_cast<int>(config.get_int("J", f.J));
  f.beta = config.get_double("beta", f.beta);
  f.replicas = static_cast<int>(config.get_int("replicas", f.replicas));
  f.seed = static_cast<std::uint64_t>(config.get_int("seed", 1));
  f.chain_eta_scale = config.get_double("chain_eta_scale", f.chain_eta_scale);
  f.thresholds.max_abs_z = config.get_double("max_abs_z", f.thresholds.max_abs_z);
  f.thresholds.max_cov_rel_error =
      config.get_double("max_cov_rel_error", f.thresholds.max_cov_rel_error);
  if (f.d < 1 || f.episodes < 1 || f.points_per_episode < 1 || f.J < 1) {
    throw ConfigError("posterior fixture sizes must be positive");
  }
  if (f.replicas < 2) throw ConfigError("need at least two replicas");
  return f;
}

PosteriorVerification verify_posterior(const PosteriorFixture& fx) {
  // One state per data point, a single action and a single step, so the
  // regression targets are the rewards themselves.
  const int n = fx.episodes * fx.points_per_episode;
  Rng data_rng(stream_seed(fx.seed, SeedStream::kInstance));
  FeatureMap feature;
  feature.kind = FeatureKind::kTabularLinear;
  feature.n_states = n;
  feature.n_actions = 1;
  feature.table.resize(n, fx.d);
  Vector rewards(n);
  for (int i = 0; i < n; ++i) {
    const Vector g = data_rng.gaussian(fx.d);
    const double radius = 0.25 + 0.75 * data_rng.uniform();
    feature.table.row(i) = (radius * g / g.norm()).transpose();
    rewards[i] = data_rng.uniform();
  }
  const LinearDims dims{1, fx.episodes, fx.d};
  LmcSchedule schedule;
  schedule.lambda = fx.lambda;
  schedule.beta_mode = ScheduleMode::kFixed;
  schedule.beta = fx.beta;
  schedule.j_mode = ScheduleMode::kFixed;
  schedule.J = fx.J;

  const auto replay = [&](LmcLsviAgent& agent) {
    for (int e = 0; e < fx.episodes; ++e) {
      for (int p = 0; p < fx.points_per_episode; ++p) {
        const int i = e * fx.points_per_episode + p;
        agent.record(0, i, 0, rewards[i], 0);
      }
      agent.plan();
    }
  };

  LmcLsviAgent reference(feature, dims, schedule, fx.seed);
  reference.enable_trace(true);
  replay(reference);

  PosteriorVerification out;
  out.closed_form = closed_form_posterior(reference.trace(0));

  LmcSchedule chain_schedule = schedule;
  chain_schedule.eta_scale = fx.chain_eta_scale;
  const auto runner = [&](Rng& rng) {
    LmcLsviAgent agent(feature, dims, chain_schedule, rng.next_u64());
    replay(agent);
    return Vector(agent.chains(0)[0]);
  };
  out.empirical = empirical_moments(
      runner, fx.replicas, Rng(stream_seed(fx.seed, SeedStream::kAgent)));
  out.report = gaussian_moment_test(out.empirical, out.closed_form, fx.replicas,
                                    fx.thresholds);
  return out;
}

void write_episodes_jsonl(std::ostream& out, const RunRecord& record) {
  for (const EpisodeRow& r : record.rows) {
    const nlohmann::json j = {{"schema", kSchemaVersion},
                              {"fingerprint", record.fingerprint},
                              {"version", record.version},
                              {"agent", record.agent},
                              {"seed", record.seed},
                              {"neural", record.neural},
                              {"k", r.k},
                              {"steps", r.steps},
                              {"return", r.ret},
                              {"value", r.value},
                              {"regret", r.regret},
                              {"cum_regret", r.cum_regret}};
    out << j.dump() << '\n';
  }
}

void write_timing_jsonl(std::ostream& out, const RunRecord& record) {
  for (const EpisodeRow& r : record.rows) {
    const nlohmann::json j = {
        {"schema", kSchemaVersion}, {"k", r.k}, {"wall_ms", r.wall_ms}};
    out << j.dump() << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "row,agent,seed,episodes,final_metric,cum_regret\n";
  if (records.empty()) return;
  double sum = 0.0, sum_regret = 0.0;
  for (const RunRecord& r : records) {
    const double regret = r.rows.empty() ? 0.0 : r.rows.back().cum_regret;
    out << "seed," << r.agent << ',' << r.seed << ',' << r.rows.size() << ','
        << format_double(r.final_metric()) << ',' << format_double(regret)
        << '\n';
    sum += r.final_metric();
    sum_regret += regret;
  }
  const double n = static_cast<double>(records.size());
  const double mean = sum / n, mean_regret = sum_regret / n;
  double ss = 0.0, ss_regret = 0.0;
  for (const RunRecord& r : records) {
    const double regret = r.rows.empty() ? 0.0 : r.rows.back().cum_regret;
    ss += (r.final_metric() - mean) * (r.final_metric() - mean);
    ss_regret += (regret - mean_regret) * (regret - mean_regret);
  }
  const double se = records.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  const double se_regret =
      records.size() > 1 ? std::sqrt(ss_regret / (n - 1) / n) : 0.0;
  const std::string& agent = records.front().agent;
  out << "mean," << agent << ",," << records.size() << ','
      << format_double(mean) << ',' << format_double(mean_regret) << '\n';
  out << "se," << agent << ",," << records.size() << ',' << format_double(se)
      << ',' << format_double(se_regret) << '\n';
}

RunRecord parse_episodes_jsonl(std::istream& episodes, std::istream* timing) {
  RunRecord rec;
  std::string line;
  bool first = true;
  try {
    while (std::getline(episodes, line)) {
      if (trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (j.at("schema") != kSchemaVersion) {
        throw IoError("unsupported schema " + j.at("schema").dump());
      }
      if (first) {
        rec.fingerprint = j.at("fingerprint").get<std::string>();
        rec.version = j.at("version").get<std::string>();
        rec.agent = j.at("agent").get<std::string>();
        rec.seed = j.at("seed").get<std::uint64_t>();
        rec.neural = j.at("neural").get<bool>();
        first = false;
      }
      EpisodeRow r;
      r.k = j.at("k").get<int>();
      r.steps = j.at("steps").get<long long>();
      r.ret = j.at("return").get<double>();
      r.value = j.at("value").get<double>();
      r.regret = j.at("regret").get<double>();
      r.cum_regret = j.at("cum_regret").get<double>();
      rec.rows.push_back(r);
    }
    if (timing != nullptr) {
      std::size_t i = 0;
      while (std::getline(*timing, line)) {
        if (trim(line).empty()) continue;
        const auto j = nlohmann::json::parse(line);
        if (i >= rec.rows.size() || j.at("k").get<int>() != rec.rows[i].k) {
          throw IoError("timing rows do not match episode rows");
        }
        rec.rows[i++].wall_ms = j.at("wall_ms").get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed JSONL: ") + e.what());
  }
  return rec;
}

void emit_report(const std::vector<RunRecord>& records, const std::string& root,
                 const RunConfig& config) {
  namespace fs = std::filesystem;
  const auto open = [](const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
  };
  std::error_code ec;
  const fs::path dir = fs::path(root) / config.fingerprint();
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    auto out = open(dir / "config.txt");
    out << config.identity();
  }
  for (const RunRecord& r : records) {
    if (r.fingerprint != config.fingerprint()) {
      throw IoError("record does not belong to this config");
    }
    const fs::path run_dir = fs::path(root) / r.fingerprint / std::to_string(r.seed);
    fs::create_directories(run_dir, ec);
    if (ec) throw IoError("cannot create " + run_dir.string());
    auto episodes = open(run_dir / "episodes.jsonl");
    write_episodes_jsonl(episodes, r);
    auto timing = open(run_dir / "timing.jsonl");
    write_timing_jsonl(timing, r);
    if (!episodes || !timing) throw IoError("write failed in " + run_dir.string());
  }
  auto summary = open(dir / "summary.csv");
  write_summary_csv(summary, records);
  if (!summary) throw IoError("write failed for summary.csv");
}

RunRecord load_run(const std::string& episodes_path) {
  namespace fs = std::filesystem;
  std::ifstream episodes(episodes_path);
  if (!episodes) throw IoError("cannot read " + episodes_path);
  const fs::path timing_path = fs::path(episodes_path).parent_path() / "timing.jsonl";
  std::ifstream timing(timing_path);
  return parse_episodes_jsonl(episodes, timing ? &timing : nullptr);
}

std::string output_root(const std::string& fallback) {
  const char* env = std::getenv("LMC_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : fallback;
}

}  // namespace lmcrl

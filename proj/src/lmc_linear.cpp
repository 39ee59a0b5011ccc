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

#include "lmcrl/lmc_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "lmcrl/errors.hpp"
#include "lmcrl/sgld_optim.hpp"

namespace lmcrl {

LinearData::LinearData(FeatureMap feature, int horizon, double lambda)
    : feature_(std::move(feature)), horizon_(horizon), lambda_(lambda) {
  if (horizon < 1) throw InvalidSize("LinearData needs H >= 1");
  if (!(lambda > 0.0)) throw ConfigError("ridge lambda must be positive");
  steps_.resize(horizon);
  for (Step& s : steps_) {
    s.gram = SpdMatrix::ridge(dim(), lambda);
    s.b = Vector::Zero(dim());
    s.w_hat = Vector::Zero(dim());
  }
}

void LinearData::record(int h, int state, int action, double reward,
                        int next_state) {
  if (h < 0 || h >= horizon_) throw InvalidSize("record: step out of range");
  if (state < 0 || state >= feature_.n_states || action < 0 ||
      action >= feature_.n_actions || next_state < 0 ||
      next_state >= feature_.n_states) {
    throw InvalidSize("record: state or action out of range");
  }
  Step& s = steps_[h];
  s.gram.add_outer(feature_.phi(state, action));
  s.data.push_back({state, action, reward, next_state});
}

void LinearData::grouped_targets(int h, const Vector& v_next, Vector* counts,
                                 Vector* sums) const {
  const int rows = static_cast<int>(feature_.table.rows());
  counts->setZero(rows);
  sums->setZero(rows);
  for (const Datum& x : steps_[h].data) {
    const int row = feature_.index(x.state, x.action);
    (*counts)[row] += 1.0;
    (*sums)[row] += x.reward + v_next[x.next_state];
  }
}

void LinearData::rebuild_targets(int h, const Vector& v_next, long long epoch) {
  if (v_next.size() != feature_.n_states) {
    throw DimensionMismatch("rebuild_targets: v_next size");
  }
  Step& s = steps_[h];
  Vector counts, sums;
  grouped_targets(h, v_next, &counts, &sums);
  // Targets sharing a feature row contribute (sum of targets) * phi_row.
  s.b = feature_.table.transpose() * sums;
  s.w_hat = s.data.empty() ? Vector::Zero(dim()) : spd_solve(s.gram, s.b);
  s.epoch = epoch;
}

Vector LinearData::grad_loss(int h, const Vector& w, long long epoch) const {
  const Step& s = steps_[h];
  if (s.epoch != epoch) throw StaleTargets("targets not rebuilt this episode");
  if (w.size() != dim()) throw DimensionMismatch("grad_loss: w size");
  return 2.0 * (s.gram.matrix() * w - s.b);
}

double LinearData::loss(int h, const Vector& w, const Vector& v_next) const {
  double total = lambda_ * w.squaredNorm();
  for (const Datum& x : steps_[h].data) {
    const double y = x.reward + v_next[x.next_state];
    const double e = y - feature_.phi(x.state, x.action).dot(w);
    total += e * e;
  }
  return total;
}

Vector LinearData::grouped_noise(int h, double sigma, Rng& rng) const {
  const int rows = static_cast<int>(feature_.table.rows());
  std::vector<int> counts(rows, 0);
  for (const Datum& x : steps_[h].data) {
    ++counts[feature_.index(x.state, x.action)];
  }
  // A sum of n iid N(0, sigma^2) draws is N(0, n sigma^2).
  Vector out = Vector::Zero(dim());
  for (int row = 0; row < rows; ++row) {
    if (counts[row] == 0) continue;
    const double z = sigma * std::sqrt(static_cast<double>(counts[row])) *
                     rng.normal();
    out += z * feature_.table.row(row).transpose();
  }
  return out;
}

nlohmann::json LinearData::to_json() const {
  nlohmann::json steps = nlohmann::json::array();
  for (const Step& s : steps_) {
    nlohmann::json rows = nlohmann::json::array();
    for (const Datum& x : s.data) {
      rows.push_back({x.state, x.action, x.reward, x.next_state});
    }
    steps.push_back(std::move(rows));
  }
  return {{"horizon", horizon_}, {"lambda", lambda_}, {"data", steps}};
}

LinearData LinearData::from_json(const nlohmann::json& j, FeatureMap feature) {
  LinearData out(std::move(feature), j.at("horizon").get<int>(),
                 j.at("lambda").get<double>());
  const auto& steps = j.at("data");
  if (static_cast<int>(steps.size()) != out.horizon_) {
    throw IoError("checkpoint data does not match horizon");
  }
  // Replaying the records in order rebuilds Lambda bit-for-bit.
  for (int h = 0; h < out.horizon_; ++h) {
    for (const auto& row : steps[h]) {
      out.record(h, row.at(0).get<int>(), row.at(1).get<int>(),
                 row.at(2).get<double>(), row.at(3).get<int>());
    }
  }
  return out;
}

int greedy_act(const std::vector<Matrix>& q, int state, int h) {
  return argmax(q.at(h).row(state));
}

void LmcSchedule::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (eta_mode == ScheduleMode::kFixed && !(eta > 0.0)) {
    throw ConfigError("fixed eta must be positive");
  }
  if (!(eta_scale > 0.0)) throw ConfigError("eta_scale must be positive");
  if (beta_mode == ScheduleMode::kFixed && !(beta > 0.0)) {
    throw ConfigError("fixed beta must be positive");
  }
  if (!(beta_scale > 0.0)) throw ConfigError("beta_scale must be positive");
  if (j_mode == ScheduleMode::kFixed && J < 1) {
    throw ConfigError("fixed J must be >= 1");
  }
  if (M < 1) throw ConfigError("M must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must be in (0,1)");
}

int auto_update_number(double kappa, const LinearDims& dims) {
  const double x = 4.0 * dims.H * static_cast<double>(dims.K) * dims.d;
  return static_cast<int>(std::ceil(2.0 * kappa * std::log(x)));
}

int auto_sample_count(int H, int K, double delta) {
  const double num = std::log(H * static_cast<double>(K) / delta);
  const double den = -std::log1p(-kOptimismConstant);
  return std::max(1, static_cast<int>(std::ceil(num / den)));
}

double auto_beta(const LinearDims& dims, double scale) {
  const double inv_sqrt = scale * dims.H * std::sqrt(static_cast<double>(dims.d));
  return 1.0 / (inv_sqrt * inv_sqrt);
}

double theoretical_beta(const LinearDims& dims, double delta) {
  const double H = dims.H;
  const double K = dims.K;
  const double d = dims.d;
  // x = 1/sqrt(beta). The right-hand side grows like sqrt(log x), so the
  // iteration is a contraction for x above a small threshold.
  auto rhs = [&](double x) {
    const double b_half = 16.0 / 3.0 * H * d * std::sqrt(K) +
                          std::sqrt(2.0 * K / (3.0 * delta / 2.0)) * x *
                              std::pow(d, 1.5);
    const double c2 = 0.5 * std::log(K + 1.0) +
                      std::log(2.0 * std::sqrt(2.0) * K * b_half / H) +
                      std::log(2.0 / delta);
    return 10.0 * H * std::sqrt(d) * std::sqrt(c2) + 8.0 / 3.0;
  };
  double x = 8.0 / 3.0;
  for (int i = 0; i < 500; ++i) {
    const double next = rhs(x);
    if (std::abs(next - x) <= 1e-14 * next) {
      x = next;
      return 1.0 / (x * x);
    }
    x = next;
  }
  throw NoConvergence("beta constant fixed point did not settle");
}

ResolvedSchedule auto_schedules(const SpdMatrix& gram, const LinearDims& dims,
                                const LmcSchedule& schedule) {
  ResolvedSchedule out;
  const bool need_eig = schedule.eta_mode == ScheduleMode::kAuto ||
                        schedule.j_mode == ScheduleMode::kAuto;
  EigBounds eig{1.0, 1.0, 1.0};
  if (schedule.j_mode == ScheduleMode::kAuto) {
    eig = eig_extremes(gram);
  } else if (need_eig) {
    eig.lambda_max = lambda_max(gram);
  }
  out.kappa = eig.kappa;
  out.eta = schedule.eta_mode == ScheduleMode::kAuto
                ? schedule.eta_scale / (4.0 * eig.lambda_max)
                : schedule.eta;
  if (schedule.beta_mode == ScheduleMode::kFixed) {
    out.beta = schedule.beta;
  } else if (schedule.full_beta_constant) {
    out.beta = theoretical_beta(dims, schedule.delta);
  } else {
    out.beta = auto_beta(dims, schedule.beta_scale);
  }
  out.J = schedule.j_mode == ScheduleMode::kAuto
              ? auto_update_number(eig.kappa, dims)
              : schedule.J;
  out.M = schedule.auto_m ? auto_sample_count(dims.H, dims.K, schedule.delta)
                          : schedule.M;
  return out;
}

LmcLsviAgent::LmcLsviAgent(FeatureMap feature, const LinearDims& dims,
                           const LmcSchedule& schedule, std::uint64_t seed)
    : dims_(dims), schedule_(schedule), seed_(seed) {
  schedule_.validate();
  if (dims.H < 1 || dims.K < 1) throw InvalidSize("dims must be positive");
  if (dims_.d != feature.dim()) {
    throw DimensionMismatch("dims.d does not match the feature map");
  }
  data_ = LinearData(std::move(feature), dims.H, schedule.lambda);
  m_ = schedule_.auto_m
           ? auto_sample_count(dims.H, dims.K, schedule_.delta)
           : schedule_.M;
  // Chain m always draws from substream m, so the first chains of a larger
  // ensemble replay a smaller one exactly.
  const Rng root(seed);
  for (int m = 0; m < m_; ++m) rngs_.push_back(root.substream(m));
  chains_.assign(dims.H, std::vector<Vector>(m_, Vector::Zero(dims.d)));
  resolved_.resize(dims.H);
  const FeatureMap& f = data_.feature();
  q_.assign(dims.H, Matrix::Zero(f.n_states, f.n_actions));
  traces_.assign(dims.H, ChainTrace{Vector::Zero(dims.d), {}});
}

void LmcLsviAgent::record(int h, int state, int action, double reward,
                          int next_state) {
  data_.record(h, state, action, reward, next_state);
}

void LmcLsviAgent::noisy_step(int h, const ResolvedSchedule& r) {
  for (int m = 0; m < m_; ++m) {
    Vector& w = chains_[h][m];
    const Vector grad = data_.grad_loss(h, w, episode_);
    sgld_step(w, grad, r.eta, r.beta, rngs_[m]);
  }
}

void LmcLsviAgent::plan_step(int h, const Vector& v_next) {
  data_.rebuild_targets(h, v_next, episode_);
  ResolvedSchedule r = auto_schedules(data_.gram(h), dims_, schedule_);
  r.M = m_;
  resolved_[h] = r;
  if (trace_on_) {
    traces_[h].episodes.push_back(
        {r.eta, r.beta, r.J, data_.gram(h).matrix(), data_.w_hat(h)});
  }
  // Chains warm-start from where the previous episode left them.
  for (int j = 0; j < r.J; ++j) noisy_step(h, r);
  refresh_q(h);
}

void LmcLsviAgent::plan() {
  ++episode_;
  Vector v_next = Vector::Zero(data_.feature().n_states);
  for (int h = dims_.H - 1; h >= 0; --h) {
    plan_step(h, v_next);
    v_next = q_[h].rowwise().maxCoeff();
  }
}

void LmcLsviAgent::refresh_q(int h) {
  const FeatureMap& f = data_.feature();
  Matrix w(dims_.d, m_);
  for (int m = 0; m < m_; ++m) w.col(m) = chains_[h][m];
  const Matrix values = f.table * w;
  const double cap = dims_.H - h;
  Matrix& q = q_[h];
  for (int s = 0; s < f.n_states; ++s) {
    for (int a = 0; a < f.n_actions; ++a) {
      const double best = values.row(f.index(s, a)).maxCoeff();
      q(s, a) = std::clamp(best, 0.0, cap);
    }
  }
}

double LmcLsviAgent::raw_q_value(int h, const Vector& phi) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const Vector& w : chains_[h]) best = std::max(best, phi.dot(w));
  return best;
}

double LmcLsviAgent::q_value(int h, const Vector& phi) const {
  return std::clamp(raw_q_value(h, phi), 0.0,
                    static_cast<double>(dims_.H - h));
}

nlohmann::json to_json(const LmcSchedule& s) {
  auto mode = [](ScheduleMode m) {
    return m == ScheduleMode::kAuto ? "auto" : "fixed";
  };
  return {{"lambda", s.lambda},
          {"eta_mode", mode(s.eta_mode)},
          {"eta", s.eta},
          {"eta_scale", s.eta_scale},
          {"beta_mode", mode(s.beta_mode)},
          {"beta", s.beta},
          {"beta_scale", s.beta_scale},
          {"full_beta_constant", s.full_beta_constant},
          {"j_mode", mode(s.j_mode)},
          {"J", s.J},
          {"M", s.M},
          {"auto_m", s.auto_m},
          {"delta", s.delta}};
}

LmcSchedule schedule_from_json(const nlohmann::json& j) {
  auto mode = [](const std::string& m) {
    if (m == "auto") return ScheduleMode::kAuto;
    if (m == "fixed") return ScheduleMode::kFixed;
    throw ConfigError("unknown schedule mode: " + m);
  };
  LmcSchedule s;
  s.lambda = j.at("lambda").get<double>();
  s.eta_mode = mode(j.at("eta_mode").get<std::string>());
  s.eta = j.at("eta").get<double>();
  s.eta_scale = j.at("eta_scale").get<double>();
  s.beta_mode = mode(j.at("beta_mode").get<std::string>());
  s.beta = j.at("beta").get<double>();
  s.beta_scale = j.at("beta_scale").get<double>();
  s.full_beta_constant = j.at("full_beta_constant").get<bool>();
  s.j_mode = mode(j.at("j_mode").get<std::string>());
  s.J = j.at("J").get<int>();
  s.M = j.at("M").get<int>();
  s.auto_m = j.at("auto_m").get<bool>();
  s.delta = j.at("delta").get<double>();
  return s;
}

nlohmann::json LmcLsviAgent::checkpoint() const {
  nlohmann::json chains = nlohmann::json::array();
  for (const auto& per_h : chains_) {
    nlohmann::json row = nlohmann::json::array();
    for (const Vector& w : per_h) {
      row.push_back(std::vector<double>(w.data(), w.data() + w.size()));
    }
    chains.push_back(std::move(row));
  }
  nlohmann::json rngs = nlohmann::json::array();
  for (const Rng& r : rngs_) rngs.push_back(r.serialize());
  return {{"schema", "v1"},
          {"agent", name()},
          {"dims", {dims_.H, dims_.K, dims_.d}},
          {"schedule", to_json(schedule_)},
          {"seed", seed_},
          {"episode", episode_},
          {"rngs", rngs},
          {"chains", chains},
          {"data", data_.to_json()}};
}

LmcLsviAgent LmcLsviAgent::restore(const nlohmann::json& j,
                                   FeatureMap feature) {
  if (j.at("agent").get<std::string>() != "lmc_lsvi") {
    throw IoError("checkpoint is not an lmc_lsvi agent");
  }
  const auto& d = j.at("dims");
  const LinearDims dims{d.at(0).get<int>(), d.at(1).get<int>(),
                        d.at(2).get<int>()};
  LmcLsviAgent agent(feature, dims, schedule_from_json(j.at("schedule")),
                     j.at("seed").get<std::uint64_t>());
  agent.episode_ = j.at("episode").get<long long>();
  const auto& rngs = j.at("rngs");
  if (static_cast<int>(rngs.size()) != agent.m_) {
    throw IoError("checkpoint chain count mismatch");
  }
  for (int m = 0; m < agent.m_; ++m) {
    agent.rngs_[m] = Rng::deserialize(rngs[m].get<std::string>());
  }
  const auto& chains = j.at("chains");
  for (int h = 0; h < dims.H; ++h) {
    for (int m = 0; m < agent.m_; ++m) {
      const auto values = chains.at(h).at(m).get<std::vector<double>>();
      if (static_cast<int>(values.size()) != dims.d) {
        throw IoError("checkpoint chain size mismatch");
      }
      agent.chains_[h][m] = Eigen::Map<const Vector>(values.data(), dims.d);
    }
    agent.refresh_q(h);
  }
  agent.data_ = LinearData::from_json(j.at("data"), std::move(feature));
  return agent;
}

}  // namespace lmcrl

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

#ifndef LMCRL_LMC_LINEAR_HPP_
#define LMCRL_LMC_LINEAR_HPP_

#include <string>
#include <vector>

#include "json.hpp"

#include "lmcrl/environments.hpp"
#include "lmcrl/numerics.hpp"
#include "lmcrl/rng.hpp"

namespace lmcrl {

// Problem sizes the theoretical schedules depend on.
struct LinearDims {
  int H = 1;
  int K = 1;
  int d = 1;
};

// One observed step. phi is looked up from the feature map on demand.
struct Datum {
  int state;
  int action;
  double reward;
  int next_state;
};

// Per-step regression statistics: Lambda_h is maintained incrementally, while
// b_h and its solution are rebuilt from the raw data whenever the next-step
// value function changes.
class LinearData {
 public:
  LinearData() = default;
  LinearData(FeatureMap feature, int horizon, double lambda);

  const FeatureMap& feature() const { return feature_; }
  int horizon() const { return horizon_; }
  int dim() const { return feature_.dim(); }
  double ridge() const { return lambda_; }

  void record(int h, int state, int action, double reward, int next_state);

  // b_h = sum over data of (r + v_next[x']) phi, and w_hat_h = Lambda_h^{-1} b_h.
  // Marks the targets as current for `epoch`.
  void rebuild_targets(int h, const Vector& v_next, long long epoch);

  // 2 (Lambda_h w - b_h). Throws StaleTargets unless the targets were built
  // for `epoch`.
  Vector grad_loss(int h, const Vector& w, long long epoch) const;
  // sum (y - phi^T w)^2 + lambda |w|^2 with the current targets.
  double loss(int h, const Vector& w, const Vector& v_next) const;

  const SpdMatrix& gram(int h) const { return steps_[h].gram; }
  const Vector& b(int h) const { return steps_[h].b; }
  const Vector& w_hat(int h) const { return steps_[h].w_hat; }
  const std::vector<Datum>& data(int h) const { return steps_[h].data; }
  int count(int h) const { return static_cast<int>(steps_[h].data.size()); }
  long long targets_epoch(int h) const { return steps_[h].epoch; }

  // Sum of noise draws per feature row, for perturbed regressions: returns
  // sum_tau xi_tau phi_tau with xi iid N(0, sigma^2), grouped by row so the
  // cost is independent of the data count.
  Vector grouped_noise(int h, double sigma, Rng& rng) const;

  // Per-row data counts and target sums, used by the grouped rebuild.
  void grouped_targets(int h, const Vector& v_next, Vector* counts,
                       Vector* sums) const;

  nlohmann::json to_json() const;
  static LinearData from_json(const nlohmann::json& j, FeatureMap feature);

 private:
  struct Step {
    SpdMatrix gram;
    std::vector<Datum> data;
    Vector b;
    Vector w_hat;
    long long epoch = -1;
  };

  FeatureMap feature_;
  int horizon_ = 0;
  double lambda_ = 1.0;
  std::vector<Step> steps_;
};

// Greedy action w.r.t. an S x A table row, ties to the lowest index.
int greedy_act(const std::vector<Matrix>& q, int state, int h);

// Common interface of the linear-experiment agents. Q tables are S x A per
// step and already truncated to [0, H - h].
class LinearAgent {
 public:
  virtual ~LinearAgent() = default;
  virtual std::string name() const = 0;
  // Prepares Q tables for the next episode from all recorded data.
  virtual void plan() = 0;
  virtual void record(int h, int state, int action, double reward,
                      int next_state) = 0;
  virtual const std::vector<Matrix>& q_tables() const = 0;
  virtual int act(int h, int state) const {
    return greedy_act(q_tables(), state, h);
  }
};

enum class ScheduleMode { kAuto, kFixed };

struct LmcSchedule {
  double lambda = 1.0;
  ScheduleMode eta_mode = ScheduleMode::kAuto;
  double eta = 0.0;
  // Multiplies the auto step size. Only the corrupted posterior fixture
  // sets it away from 1.
  double eta_scale = 1.0;
  ScheduleMode beta_mode = ScheduleMode::kFixed;
  double beta = 1.0;
  double beta_scale = 1.0;  // c_beta in 1/sqrt(beta) = c_beta H sqrt(d)
  bool full_beta_constant = false;
  ScheduleMode j_mode = ScheduleMode::kFixed;
  int J = 1;
  int M = 1;
  bool auto_m = false;
  double delta = 0.05;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

struct ResolvedSchedule {
  double eta = 0.0;
  double beta = 0.0;
  int J = 1;
  int M = 1;
  double kappa = 1.0;
};

inline constexpr double kOptimismConstant = 0.12098536225957168;  // 1/(2 sqrt(2 e pi))

// ceil(2 kappa ln(4 H K d)).
int auto_update_number(double kappa, const LinearDims& dims);
// ceil(ln(H K / delta) / ln(1 / (1 - c))), c = 1/(2 sqrt(2 e pi)).
int auto_sample_count(int H, int K, double delta);
// beta with 1/sqrt(beta) = scale * H * sqrt(d).
double auto_beta(const LinearDims& dims, double scale);
// beta from the fixed point of 1/sqrt(beta) = 10 H sqrt(d) C_delta + 8/3,
// where C_delta itself depends on beta through B_{delta/2}.
double theoretical_beta(const LinearDims& dims, double delta);

ResolvedSchedule auto_schedules(const SpdMatrix& gram, const LinearDims& dims,
                                const LmcSchedule& schedule);

// Per-episode record of what a chain at step h was run with.
struct TraceEntry {
  double eta;
  double beta;
  int J;
  Matrix gram;
  Vector w_hat;
};

struct ChainTrace {
  Vector w0;
  std::vector<TraceEntry> episodes;
};

// LMC-LSVI with M parallel chains (M = 1 is the plain algorithm).
class LmcLsviAgent : public LinearAgent {
 public:
  LmcLsviAgent(FeatureMap feature, const LinearDims& dims,
               const LmcSchedule& schedule, std::uint64_t seed);

  std::string name() const override { return "lmc_lsvi"; }
  void plan() override;
  void record(int h, int state, int action, double reward,
              int next_state) override;
  const std::vector<Matrix>& q_tables() const override { return q_; }

  // One backward-pass step: rebuild targets from v_next, resolve the
  // schedule, run J noisy steps on every chain and refresh Q_h.
  void plan_step(int h, const Vector& v_next);
  // Advances every chain at step h by one Langevin step.
  void noisy_step(int h, const ResolvedSchedule& resolved);

  // clip(max_m phi^T w_h^m, 0, H - h).
  double q_value(int h, const Vector& phi) const;
  // max_m phi^T w_h^m without truncation.
  double raw_q_value(int h, const Vector& phi) const;
  int select_action(int h, int state) const { return act(h, state); }

  const LinearData& data() const { return data_; }
  const std::vector<Vector>& chains(int h) const { return chains_[h]; }
  const ResolvedSchedule& last_schedule(int h) const { return resolved_[h]; }
  int episode() const { return static_cast<int>(episode_); }
  int sample_count() const { return m_; }

  void enable_trace(bool on) { trace_on_ = on; }
  const ChainTrace& trace(int h) const { return traces_[h]; }

  nlohmann::json checkpoint() const;
  static LmcLsviAgent restore(const nlohmann::json& j, FeatureMap feature);

 private:
  void refresh_q(int h);

  LinearData data_;
  LinearDims dims_;
  LmcSchedule schedule_;
  std::uint64_t seed_;
  int m_ = 1;
  long long episode_ = 0;
  std::vector<Rng> rngs_;                   // one per chain
  std::vector<std::vector<Vector>> chains_;  // [h][m]
  std::vector<ResolvedSchedule> resolved_;
  std::vector<Matrix> q_;
  bool trace_on_ = false;
  std::vector<ChainTrace> traces_;
};

nlohmann::json to_json(const LmcSchedule& schedule);
LmcSchedule schedule_from_json(const nlohmann::json& j);

}  // namespace lmcrl

#endif  // LMCRL_LMC_LINEAR_HPP_

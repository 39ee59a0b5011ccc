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

#ifndef LMCRL_BASELINES_LINEAR_HPP_
#define LMCRL_BASELINES_LINEAR_HPP_

#include <string>
#include <vector>

#include "lmcrl/environments.hpp"
#include "lmcrl/lmc_linear.hpp"
#include "lmcrl/rng.hpp"

namespace lmcrl {

struct UcbConfig {
  double bonus = 1.0;  // beta_ucb
  double lambda = 1.0;
  void validate() const;
};

struct PheConfig {
  int M = 1;
  double sigma = 1.0;
  double lambda = 1.0;
  void validate() const;
};

// Q_h = clip(phi^T w_hat_h + bonus |phi|_{Lambda_h^{-1}}, 0, H - h).
class LsviUcbAgent : public LinearAgent {
 public:
  LsviUcbAgent(FeatureMap feature, int horizon, const UcbConfig& config);

  std::string name() const override { return "lsvi_ucb"; }
  void plan() override;
  void record(int h, int state, int action, double reward,
              int next_state) override;
  const std::vector<Matrix>& q_tables() const override { return q_; }
  const LinearData& data() const { return data_; }

 private:
  LinearData data_;
  UcbConfig config_;
  long long episode_ = 0;
  std::vector<Matrix> q_;
};

// Perturbed-history exploration: each ensemble member solves the ridge
// regression with iid N(0, sigma^2) noise on every target and a
// N(0, sigma^2 I) ridge anchor; Q_h = clip(max_m phi^T w_m, 0, H - h).
class LsviPheAgent : public LinearAgent {
 public:
  LsviPheAgent(FeatureMap feature, int horizon, const PheConfig& config,
               std::uint64_t seed);

  std::string name() const override { return "lsvi_phe"; }
  void plan() override;
  void record(int h, int state, int action, double reward,
              int next_state) override;
  const std::vector<Matrix>& q_tables() const override { return q_; }
  const LinearData& data() const { return data_; }

  // One perturbed solution at step h with the current targets.
  Vector perturbed_solution(int h, const Cholesky& chol, Rng& rng) const;

  // Last ensemble at step h.
  const std::vector<Vector>& ensemble(int h) const { return ensemble_[h]; }

 private:
  LinearData data_;
  PheConfig config_;
  Rng rng_;
  long long episode_ = 0;
  std::vector<std::vector<Vector>> ensemble_;
  std::vector<Matrix> q_;
};

// Acts with a fixed Q table, e.g. the optimal one.
class TableAgent : public LinearAgent {
 public:
  TableAgent(std::string name, std::vector<Matrix> q)
      : name_(std::move(name)), q_(std::move(q)) {}
  std::string name() const override { return name_; }
  void plan() override {}
  void record(int, int, int, double, int) override {}
  const std::vector<Matrix>& q_tables() const override { return q_; }

 private:
  std::string name_;
  std::vector<Matrix> q_;
};

// Greedy w.r.t. Q* from value iteration.
TableAgent make_oracle_agent(const EpisodicMdp& mdp);
// Always takes action 0.
TableAgent make_first_action_agent(const EpisodicMdp& mdp);

}  // namespace lmcrl

#endif  // LMCRL_BASELINES_LINEAR_HPP_

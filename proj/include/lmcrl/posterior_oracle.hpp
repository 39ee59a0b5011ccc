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

#ifndef LMCRL_POSTERIOR_ORACLE_HPP_
#define LMCRL_POSTERIOR_ORACLE_HPP_

#include <functional>
#include <vector>

#include "json.hpp"

#include "lmcrl/lmc_linear.hpp"
#include "lmcrl/numerics.hpp"
#include "lmcrl/rng.hpp"

namespace lmcrl {

struct ClosedFormPosterior {
  Vector mean;
  Matrix cov;  // symmetric PSD; zero in the noiseless limit
  ChainTrace trace;
};

// A^n by binary exponentiation, re-symmetrized after every product.
Matrix symmetric_power(const Matrix& a, long long n);

// Exact law of the chain output after the traced episodes. Throws
// StepSizeTooLarge unless every A_i = I - 2 eta_i Lambda_i has its spectrum
// inside (0, 1).
ClosedFormPosterior closed_form_posterior(const ChainTrace& trace);

struct EmpiricalMoments {
  Vector mean;
  Matrix cov;  // unbiased
  int n = 0;
};

// Runs `replicas` independent chains; replica r draws from rng.substream(r).
EmpiricalMoments empirical_moments(
    const std::function<Vector(Rng&)>& chain_runner, int replicas,
    const Rng& rng);
// Moments of the columns of `samples`, reduced by pairwise summation.
EmpiricalMoments sample_moments(const Matrix& samples);

struct MomentThresholds {
  double max_abs_z = 4.0;
  double max_cov_rel_error = 0.10;
};

struct TestReport {
  Vector z;                       // per-coordinate mean z-scores
  std::vector<int> flagged;       // coordinates with |z| over threshold
  double cov_rel_error = 0.0;     // |S - Sigma|_F / |Sigma|_F
  int n = 0;
  MomentThresholds thresholds;
  bool pass = false;
};

// z_i = (mean_i - mu_i) / sqrt(Sigma_ii / n). A zero-variance coordinate
// scores 0 if it matches exactly and infinity otherwise.
TestReport gaussian_moment_test(const EmpiricalMoments& empirical,
                                const ClosedFormPosterior& closed_form, int n,
                                const MomentThresholds& thresholds = {});

nlohmann::json to_json(const TestReport& report);

}  // namespace lmcrl

#endif  // LMCRL_POSTERIOR_ORACLE_HPP_

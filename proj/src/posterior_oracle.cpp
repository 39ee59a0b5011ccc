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

#include "lmcrl/posterior_oracle.hpp"

#include <cmath>
#include <limits>

#include "lmcrl/errors.hpp"

namespace lmcrl {
namespace {

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Pairwise sum of columns [lo, hi).
Vector pairwise_sum(const Matrix& x, Eigen::Index lo, Eigen::Index hi) {
  if (hi - lo <= 8) {
    Vector s = Vector::Zero(x.rows());
    for (Eigen::Index i = lo; i < hi; ++i) s += x.col(i);
    return s;
  }
  const Eigen::Index mid = lo + (hi - lo) / 2;
  return pairwise_sum(x, lo, mid) + pairwise_sum(x, mid, hi);
}

Matrix pairwise_scatter(const Matrix& centered, Eigen::Index lo,
                        Eigen::Index hi) {
  if (hi - lo <= 64) {
    const auto block = centered.middleCols(lo, hi - lo);
    return block * block.transpose();
  }
  const Eigen::Index mid = lo + (hi - lo) / 2;
  return pairwise_scatter(centered, lo, mid) +
         pairwise_scatter(centered, mid, hi);
}

}  // namespace

Matrix symmetric_power(const Matrix& a, long long n) {
  if (n < 0) throw InvalidSize("negative matrix power");
  Matrix result = Matrix::Identity(a.rows(), a.cols());
  Matrix base = a;
  while (n > 0) {
    if (n & 1) result = symmetrize(result * base);
    n >>= 1;
    if (n > 0) base = symmetrize(base * base);
  }
  return result;
}

ClosedFormPosterior closed_form_posterior(const ChainTrace& trace) {
  const int d = static_cast<int>(trace.w0.size());
  const Matrix eye = Matrix::Identity(d, d);
  ClosedFormPosterior out;
  out.trace = trace;
  out.mean = trace.w0;
  out.cov = Matrix::Zero(d, d);
  // Folding the episodes in order reproduces the displayed sums: each new
  // episode maps (mu, Sigma) through A^J and adds its own contribution.
  for (const TraceEntry& e : trace.episodes) {
    if (e.gram.rows() != d || e.w_hat.size() != d) {
      throw DimensionMismatch("trace entry dimension");
    }
    const SpdMatrix gram(e.gram);
    const EigBounds eig = eig_extremes(gram);
    if (!(e.eta > 0.0) || !(2.0 * e.eta * eig.lambda_max < 1.0)) {
      throw StepSizeTooLarge("eta must lie in (0, 1/(2 lambda_max))");
    }
    const Matrix a = eye - 2.0 * e.eta * e.gram;
    const Matrix a_j = symmetric_power(a, e.J);
    out.mean = a_j * out.mean + (eye - a_j) * e.w_hat;
    Matrix next = symmetrize(a_j * out.cov * a_j.transpose());
    if (!std::isinf(e.beta)) {
      const Matrix a_2j = symmetrize(a_j * a_j);
      const Cholesky chol(gram);
      const Matrix gram_inv = chol.solve(eye);
      const Matrix plus_inv = (eye + a).inverse();
      next += symmetrize((eye - a_2j) * gram_inv * plus_inv / e.beta);
    }
    out.cov = next;
  }
  return out;
}

EmpiricalMoments sample_moments(const Matrix& samples) {
  const Eigen::Index n = samples.cols();
  if (n < 2) throw InvalidSize("sample_moments needs at least 2 samples");
  EmpiricalMoments out;
  out.n = static_cast<int>(n);
  out.mean = pairwise_sum(samples, 0, n) / static_cast<double>(n);
  const Matrix centered = samples.colwise() - out.mean;
  out.cov = symmetrize(pairwise_scatter(centered, 0, n)) /
            static_cast<double>(n - 1);
  return out;
}

EmpiricalMoments empirical_moments(
    const std::function<Vector(Rng&)>& chain_runner, int replicas,
    const Rng& rng) {
  if (replicas < 2) throw InvalidSize("need at least 2 replicas");
  Matrix samples;
  for (int r = 0; r < replicas; ++r) {
    Rng stream = rng.substream(static_cast<std::uint64_t>(r));
    const Vector w = chain_runner(stream);
    if (r == 0) samples.resize(w.size(), replicas);
    samples.col(r) = w;
  }
  return sample_moments(samples);
}

TestReport gaussian_moment_test(const EmpiricalMoments& empirical,
                                const ClosedFormPosterior& closed_form, int n,
                                const MomentThresholds& thresholds) {
  const Eigen::Index d = closed_form.mean.size();
  if (empirical.mean.size() != d || empirical.cov.rows() != d ||
      closed_form.cov.rows() != d) {
    throw DimensionMismatch("moment test dimensions");
  }
  if (n < 1) throw InvalidSize("moment test needs n >= 1");
  TestReport report;
  report.n = n;
  report.thresholds = thresholds;
  report.z.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double diff = empirical.mean[i] - closed_form.mean[i];
    const double se = std::sqrt(std::max(closed_form.cov(i, i), 0.0) / n);
    if (se > 0.0) {
      report.z[i] = diff / se;
    } else {
      report.z[i] = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    if (!(std::abs(report.z[i]) < thresholds.max_abs_z)) {
      report.flagged.push_back(static_cast<int>(i));
    }
  }
  const double ref = closed_form.cov.norm();
  const double err = (empirical.cov - closed_form.cov).norm();
  report.cov_rel_error = ref > 0.0 ? err / ref : err;
  report.pass = report.flagged.empty() &&
                report.cov_rel_error < thresholds.max_cov_rel_error;
  return report;
}

nlohmann::json to_json(const TestReport& report) {
  std::vector<double> z(report.z.data(), report.z.data() + report.z.size());
  nlohmann::json zj = nlohmann::json::array();
  for (double v : z) {
    // JSON has no infinity; report it as a string.
    if (std::isfinite(v)) {
      zj.push_back(v);
    } else {
      zj.push_back(v > 0 ? "inf" : "-inf");
    }
  }
  return {{"schema", "v1"},
          {"z", zj},
          {"flagged", report.flagged},
          {"cov_rel_error", report.cov_rel_error},
          {"n", report.n},
          {"max_abs_z", report.thresholds.max_abs_z},
          {"max_cov_rel_error", report.thresholds.max_cov_rel_error},
          {"pass", report.pass}};
}

}  // namespace lmcrl

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

#ifndef LMCRL_NUMERICS_HPP_
#define LMCRL_NUMERICS_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace lmcrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dense symmetric positive definite matrix. Symmetry is enforced at
// construction and preserved entry-for-entry by rank-one updates.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  // Takes ownership of m; throws DimensionMismatch if m is not square and
  // InvalidModel if it is not symmetric to within 1e-12 relative.
  explicit SpdMatrix(Matrix m);

  static SpdMatrix ridge(int dim, double lambda);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  // A += phi phi^T, filling the upper triangle and mirroring it.
  void add_outer(const Vector& phi);

  bool is_diagonal() const;

  friend bool operator==(const SpdMatrix& a, const SpdMatrix& b) {
    return a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

SpdMatrix rank1_update(const SpdMatrix& a, const Vector& phi);

// Cholesky factorization, reusable for several right-hand sides.
class Cholesky {
 public:
  // Throws NonPositiveDefinite if a pivot is not strictly positive.
  explicit Cholesky(const SpdMatrix& a);

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  // sqrt(phi^T A^{-1} phi).
  double inverse_norm(const Vector& phi) const;
  int dim() const { return dim_; }

 private:
  int dim_;
  Eigen::LLT<Matrix> llt_;
};

Vector spd_solve(const SpdMatrix& a, const Vector& b);

struct EigBounds {
  double lambda_max;
  double lambda_min;
  double kappa;  // lambda_max / lambda_min
};

inline constexpr int kDefaultEigIters = 10'000;

// Largest eigenvalue by power iteration. Diagonal input is read off exactly.
double lambda_max(const SpdMatrix& a, double tol = 1e-8,
                  int max_iters = kDefaultEigIters);
// Smallest eigenvalue by inverse power iteration on a Cholesky factor.
double lambda_min(const SpdMatrix& a, double tol = 1e-8,
                  int max_iters = kDefaultEigIters);
EigBounds eig_extremes(const SpdMatrix& a, double tol = 1e-8,
                       int max_iters = kDefaultEigIters);

bool all_finite(const Vector& v);

}  // namespace lmcrl

#endif  // LMCRL_NUMERICS_HPP_

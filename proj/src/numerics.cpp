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

#include "lmcrl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmcrl/errors.hpp"
#include "lmcrl/rng.hpp"

namespace lmcrl {
namespace {

void check_square(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionMismatch("SpdMatrix must be square and non-empty, got " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
}

// Fixed, generic starting direction so results never depend on call history.
Vector start_vector(int dim) {
  Rng rng(0x5eedULL);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = 1.0 + 0.5 * rng.uniform();
  return v.normalized();
}

}  // namespace

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
  check_square(m_);
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  for (int i = 0; i < dim(); ++i) {
    for (int j = i + 1; j < dim(); ++j) {
      if (std::abs(m_(i, j) - m_(j, i)) > 1e-12 * scale) {
        throw InvalidModel("SpdMatrix input is not symmetric");
      }
      m_(j, i) = m_(i, j);
    }
  }
}

SpdMatrix SpdMatrix::ridge(int dim, double lambda) {
  if (dim < 1) throw InvalidSize("ridge dimension must be positive");
  if (!(lambda > 0.0)) throw NonPositiveDefinite("ridge lambda must be > 0");
  return SpdMatrix(Matrix::Identity(dim, dim) * lambda);
}

void SpdMatrix::add_outer(const Vector& phi) {
  if (phi.size() != dim()) {
    throw DimensionMismatch("rank1_update: feature has wrong dimension");
  }
  const int n = dim();
  for (int j = 0; j < n; ++j) {
    if (phi[j] == 0.0) continue;
    for (int i = 0; i <= j; ++i) {
      m_(i, j) += phi[i] * phi[j];
      m_(j, i) = m_(i, j);
    }
  }
}

bool SpdMatrix::is_diagonal() const {
  const int n = dim();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i != j && m_(i, j) != 0.0) return false;
    }
  }
  return true;
}

SpdMatrix rank1_update(const SpdMatrix& a, const Vector& phi) {
  SpdMatrix out = a;
  out.add_outer(phi);
  return out;
}

Cholesky::Cholesky(const SpdMatrix& a) : dim_(a.dim()), llt_(a.matrix()) {
  if (llt_.info() != Eigen::Success) {
    throw NonPositiveDefinite("Cholesky pivot <= 0");
  }
}

Vector Cholesky::solve(const Vector& b) const {
  if (b.size() != dim_) throw DimensionMismatch("spd_solve: rhs dimension");
  return llt_.solve(b);
}

Matrix Cholesky::solve(const Matrix& b) const {
  if (b.rows() != dim_) throw DimensionMismatch("spd_solve: rhs rows");
  return llt_.solve(b);
}

double Cholesky::inverse_norm(const Vector& phi) const {
  // phi^T A^{-1} phi = |L^{-1} phi|^2
  const Vector half = llt_.matrixL().solve(phi);
  return half.norm();
}

Vector spd_solve(const SpdMatrix& a, const Vector& b) {
  return Cholesky(a).solve(b);
}

double lambda_max(const SpdMatrix& a, double tol, int max_iters) {
  const Matrix& m = a.matrix();
  if (a.is_diagonal()) return m.diagonal().maxCoeff();
  Vector v = start_vector(a.dim());
  for (int it = 0; it < max_iters; ++it) {
    const Vector w = m * v;
    const double rho = v.dot(w);
    const double residual = (w - rho * v).norm();
    if (residual <= tol * std::abs(rho)) return rho;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  throw NoConvergence("power iteration did not converge in " +
                      std::to_string(max_iters) + " iterations");
}

double lambda_min(const SpdMatrix& a, double tol, int max_iters) {
  const Matrix& m = a.matrix();
  if (a.is_diagonal()) {
    const double lo = m.diagonal().minCoeff();
    if (!(lo > 0.0)) throw NonPositiveDefinite("non-positive diagonal entry");
    return lo;
  }
  const Cholesky chol(a);
  Vector v = start_vector(a.dim());
  for (int it = 0; it < max_iters; ++it) {
    const Vector w = chol.solve(v);
    const double mu = v.dot(w);
    const double residual = (w - mu * v).norm();
    if (residual <= tol * std::abs(mu)) {
      const Vector u = w.normalized();
      return u.dot(m * u);
    }
    v = w.normalized();
  }
  throw NoConvergence("inverse iteration did not converge in " +
                      std::to_string(max_iters) + " iterations");
}

EigBounds eig_extremes(const SpdMatrix& a, double tol, int max_iters) {
  EigBounds out;
  out.lambda_max = lambda_max(a, tol, max_iters);
  out.lambda_min = lambda_min(a, tol, max_iters);
  out.kappa = out.lambda_max / out.lambda_min;
  return out;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace lmcrl

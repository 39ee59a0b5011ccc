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

#include "lmcrl/sgld_optim.hpp"

#include <cmath>

#include "doctest.h"
#include "lmcrl/errors.hpp"

namespace lmcrl {
namespace {

AdamSgldHyper hyper(double eta, double beta, double a) {
  AdamSgldHyper h;
  h.eta = eta;
  h.beta = beta;
  h.a = a;
  return h;
}

// Moments refreshed before the parameter step: the order the optimizer
// must not use.
void swapped_step(AdamSgldState& s, const Vector& g) {
  const AdamSgldHyper& p = s.hyper;
  s.m = p.alpha1 * s.m + (1.0 - p.alpha1) * g;
  s.v = p.alpha2 * s.v + (1.0 - p.alpha2) * g.cwiseProduct(g);
  const Vector drift =
      p.a * s.m.cwiseQuotient((s.v.array() + p.lambda1).sqrt().matrix());
  s.w -= p.eta * (g + drift);
}

TEST_CASE("noise scale") {
  CHECK(langevin_noise_scale(0.01, 1e6) == doctest::Approx(std::sqrt(2e-8)));
  CHECK(langevin_noise_scale(0.5, kInfiniteBeta) == 0.0);
}

TEST_CASE("sgld fixed point without noise") {
  Vector w{{1.0, -2.0, 3.5}};
  const Vector before = w;
  Rng rng(1);
  sgld_step(w, Vector::Zero(3), 0.1, kInfiniteBeta, rng);
  CHECK(w == before);
}

TEST_CASE("sgld increment standard deviation") {
  const double eta = 0.01, beta = 1e6;
  Rng rng(2);
  const int n = 100'000;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    Vector w = Vector::Zero(1);
    sgld_step(w, Vector::Zero(1), eta, beta, rng);
    s2 += w[0] * w[0];
  }
  CHECK(std::abs(std::sqrt(s2 / n) / 1.4142135623730951e-4 - 1.0) < 0.02);
}

TEST_CASE("sgld dimension check") {
  Vector w = Vector::Zero(2);
  Rng rng(3);
  CHECK_THROWS_AS(sgld_step(w, Vector::Zero(3), 0.1, 1.0, rng), DimensionMismatch);
}

TEST_CASE("a = 0 and infinite beta is plain gradient descent, bit for bit") {
  Rng grads(4), noise(5);
  AdamSgldState s(grads.gaussian(6), hyper(0.03, kInfiniteBeta, 0.0));
  Vector w = s.w;
  for (int t = 0; t < 500; ++t) {
    const Vector g = grads.gaussian(6);
    asgld_step(s, g, noise);
    w = w - 0.03 * g;
    REQUIRE(s.w == w);
  }
}

TEST_CASE("a = 0 matches sgld_step on a shared stream") {
  Rng grads(6), stream_a(7), stream_b(7);
  AdamSgldState s(Vector::Zero(4), hyper(0.02, 3.0, 0.0));
  Vector w = Vector::Zero(4);
  for (int t = 0; t < 300; ++t) {
    const Vector g = grads.gaussian(4);
    asgld_step(s, g, stream_a);
    sgld_step(w, g, 0.02, 3.0, stream_b);
    REQUIRE(s.w == w);
  }
}

TEST_CASE("first step has no drift") {
  Rng rng(8);
  AdamSgldState s(Vector{{0.5, -0.5}}, hyper(0.1, kInfiniteBeta, 1.0));
  asgld_step(s, Vector{{2.0, -4.0}}, rng);
  CHECK(s.w[0] == doctest::Approx(0.5 - 0.2).epsilon(1e-15));
  CHECK(s.w[1] == doctest::Approx(-0.5 + 0.4).epsilon(1e-15));
}

TEST_CASE("two constant-gradient steps by hand") {
  Rng rng(9);
  AdamSgldState s(Vector::Zero(1), hyper(0.5, kInfiniteBeta, 0.1));
  const Vector g{{1.0}};
  asgld_step(s, g, rng);
  CHECK(s.w[0] == -0.5);
  CHECK(s.m[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.v[0] == doctest::Approx(0.01).epsilon(1e-15));
  asgld_step(s, g, rng);
  const double drift = 0.1 * 0.1 / std::sqrt(0.01 + 1e-8);
  CHECK(drift == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(s.w[0] == doctest::Approx(-0.5 - 0.5 * (1.0 + drift)).epsilon(1e-15));

  // Refreshing the moments first gives a different second iterate.
  AdamSgldState t(Vector::Zero(1), hyper(0.5, kInfiniteBeta, 0.1));
  swapped_step(t, g);
  swapped_step(t, g);
  CHECK(std::abs(t.w[0] - s.w[0]) > 1e-3);
}

TEST_CASE("moments are exact moving averages") {
  Rng rng(10);
  const Vector g{{0.7, -1.3, 2.0}};
  AdamSgldState s(Vector::Zero(3), hyper(1e-3, 1e4, 1.0));
  for (int n = 1; n <= 100; ++n) {
    asgld_step(s, g, rng);
    const double c1 = 1.0 - std::pow(0.9, n), c2 = 1.0 - std::pow(0.99, n);
    CHECK((s.m - c1 * g).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.v - c2 * g.cwiseProduct(g)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("second moment stays non-negative") {
  Rng rng(11);
  AdamSgldState s(Vector::Zero(5), hyper(1e-2, 100.0, 0.5));
  for (int t = 0; t < 1000; ++t) {
    asgld_step(s, 10.0 * rng.gaussian(5), rng);
    CHECK(s.v.minCoeff() >= 0.0);
  }
}

TEST_CASE("non-finite gradients are rejected") {
  Rng rng(12);
  AdamSgldState s(Vector::Zero(2), hyper(1e-2, 1.0, 1.0));
  CHECK_THROWS_AS(asgld_step(s, Vector{{1.0, NAN}}, rng), NonFiniteGradient);
  CHECK_THROWS_AS(asgld_step(s, Vector{{INFINITY, 0.0}}, rng), NonFiniteGradient);
  AdamState a(Vector::Zero(2), 1e-3);
  CHECK_THROWS_AS(adam_step(a, Vector{{NAN, 0.0}}), NonFiniteGradient);
}

TEST_CASE("moments of untouched coordinates decay to exactly zero") {
  Rng rng(13);
  AdamSgldState s(Vector::Zero(1), hyper(1e-3, kInfiniteBeta, 1.0));
  asgld_step(s, Vector{{1.0}}, rng);
  for (int t = 0; t < 100'000; ++t) asgld_step(s, Vector{{0.0}}, rng);
  CHECK(s.m[0] == 0.0);
  CHECK(s.v[0] == 0.0);
}

TEST_CASE("adam first step moves by the learning rate") {
  AdamState a(Vector{{1.0, 1.0}}, 0.01);
  adam_step(a, Vector{{3.0, -0.5}});
  CHECK(a.t == 1);
  CHECK(a.w[0] == doctest::Approx(1.0 - 0.01 * 3.0 / (3.0 + 1e-8)));
  CHECK(a.w[1] == doctest::Approx(1.0 + 0.01 * 0.5 / (0.5 + 1e-8)));
}

TEST_CASE("adam minimizes a quadratic") {
  AdamState a(Vector{{5.0, -3.0}}, 0.05);
  for (int t = 0; t < 5000; ++t) adam_step(a, 2.0 * a.w);
  CHECK(a.w.norm() < 1e-2);
}

}  // namespace
}  // namespace lmcrl

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

#include "lmcrl/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lmcrl/errors.hpp"

namespace lmcrl {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(mix64(master) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

Rng Rng::substream(std::uint64_t stream) const {
  return Rng(derive_seed(seed_, stream));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw InvalidSize("uniform_int needs n >= 1");
  // Rejection sampling for an exactly uniform draw.
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<int>(x % range);
}

namespace {

// Ziggurat tables (Marsaglia and Tsang, 128 layers, Doornik's layout).
constexpr int kZigLayers = 128;
constexpr double kZigR = 3.442619855899;
constexpr double kZigV = 9.91256303526217e-3;

struct ZigTables {
  double x[kZigLayers + 1];
  double ratio[kZigLayers];
  ZigTables() {
    double f = std::exp(-0.5 * kZigR * kZigR);
    x[0] = kZigV / f;
    x[1] = kZigR;
    x[kZigLayers] = 0.0;
    for (int i = 2; i < kZigLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kZigV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kZigLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigTables& zig() {
  static const ZigTables tables;
  return tables;
}

}  // namespace

double Rng::normal() {
  const ZigTables& t = zig();
  for (;;) {
    const std::uint64_t bits = engine_();
    const int i = static_cast<int>(bits & (kZigLayers - 1));
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
    if (std::abs(u) < t.ratio[i]) return u * t.x[i];
    if (i == 0) {
      // Tail beyond R.
      double x, y;
      do {
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        do { u2 = uniform(); } while (u2 <= 0.0);
        x = std::log(u1) / kZigR;
        y = std::log(u2);
      } while (-2.0 * y < x * x);
      return u < 0.0 ? x - kZigR : kZigR - x;
    }
    const double x = u * t.x[i];
    const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) return x;
  }
}

Eigen::VectorXd Rng::gaussian(int dim) {
  if (dim < 1) throw InvalidSize("gaussian_sample needs dim >= 1");
  Eigen::VectorXd out(dim);
  for (int i = 0; i < dim; ++i) out[i] = normal();
  return out;
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << seed_ << ' ' << engine_;
  return os.str();
}

Rng Rng::deserialize(const std::string& text) {
  std::istringstream is(text);
  Rng rng;
  is >> rng.seed_ >> rng.engine_;
  if (!is) throw IoError("malformed rng state");
  return rng;
}

bool operator==(const Rng& a, const Rng& b) {
  return a.seed_ == b.seed_ && a.engine_ == b.engine_;
}

}  // namespace lmcrl

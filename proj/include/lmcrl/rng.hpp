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

#ifndef LMCRL_RNG_HPP_
#define LMCRL_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace lmcrl {

// SplitMix64 finalizer. Used to derive independent substream seeds from a
// master seed and a stream label, so streams never overlap by construction.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Seed-deterministic random source. Uniforms are built from raw engine bits
// and normals use a ziggurat, so the stream does not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  // Child generator for the given stream label; does not advance *this.
  Rng substream(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  // Uniform integer on [0, n).
  int uniform_int(int n);
  double normal();
  Eigen::VectorXd gaussian(int dim);

  // Full engine state. No cached deviates, so the engine is the whole state.
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  friend bool operator==(const Rng& a, const Rng& b);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline Eigen::VectorXd gaussian_sample(int dim, Rng& rng) {
  return rng.gaussian(dim);
}

}  // namespace lmcrl

#endif  // LMCRL_RNG_HPP_

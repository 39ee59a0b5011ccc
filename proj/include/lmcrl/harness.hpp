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

#ifndef LMCRL_HARNESS_HPP_
#define LMCRL_HARNESS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lmcrl/baselines_linear.hpp"
#include "lmcrl/environments.hpp"
#include "lmcrl/lmc_linear.hpp"
#include "lmcrl/neural.hpp"
#include "lmcrl/posterior_oracle.hpp"

namespace lmcrl {

inline constexpr const char* kLibraryVersion = "1.0.0";
inline constexpr const char* kSchemaVersion = "v1";

// Flat key/value configuration. Text form is one `key = value` per line with
// `#` comments; the canonical form sorts keys.
class RunConfig {
 public:
  RunConfig() = default;
  explicit RunConfig(std::map<std::string, std::string> values)
      : values_(std::move(values)) {}

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  // Applies `key=value`; throws ConfigError on a malformed assignment.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void erase(const std::string& key) { values_.erase(key); }

  std::string get(const std::string& key) const;  // throws if missing
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string canonical() const;
  // Canonical form without the seed: runs differing only in seed share it.
  std::string identity() const;
  // 16 hex digits of FNV-1a over identity().
  std::string fingerprint() const;

  // Throws ConfigError unless env, agent, seed and the run length resolve.
  void validate() const;

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& text);

// Seed streams split from the master seed.
enum class SeedStream : std::uint64_t { kEnv = 0, kAgent = 1, kEval = 2,
                                        kInstance = 3 };
std::uint64_t stream_seed(std::uint64_t master, SeedStream stream);

struct EnvInstance {
  EpisodicMdp mdp;
  FeatureMap feature;
};

// Keys: env = nchain | riverswim | linear_mdp, plus env.* parameters.
EnvInstance make_env(const RunConfig& config);
// Linear agents: lmc_lsvi, lsvi_ucb, lsvi_phe, oracle, first_action.
std::unique_ptr<LinearAgent> make_linear_agent(const RunConfig& config,
                                               const EnvInstance& env,
                                               std::uint64_t seed);
bool is_neural_agent(const std::string& name);
LmcSchedule lmc_schedule_from_config(const RunConfig& config);

struct EpisodeRow {
  int k = 0;              // episode, or evaluation index for neural runs
  long long steps = 0;    // environment steps so far
  double ret = 0.0;       // realized (linear) or evaluation (neural) return
  double value = 0.0;     // exact V^{pi_k}_1(x_1^k); equals ret for neural
  double regret = 0.0;    // V*_1(x_1^k) - value
  double cum_regret = 0.0;
  double wall_ms = 0.0;   // not part of the deterministic payload

  friend bool operator==(const EpisodeRow&, const EpisodeRow&) = default;
};

struct RunRecord {
  std::string fingerprint;
  std::string version = kLibraryVersion;
  std::string agent;
  std::uint64_t seed = 0;
  bool neural = false;
  std::vector<EpisodeRow> rows;

  // Mean of `value` over the last 10 rows.
  double final_metric() const;
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

// Runs `episodes` (linear) or `steps` (neural) under the config's seed.
RunRecord run_experiment(const RunConfig& config);

struct RegretCurve {
  std::vector<double> per_episode;
  std::vector<double> cumulative;
};

// Exact regret of the played policies from their realized start states.
// Throws InfeasibleExact when the model is too large to evaluate exactly.
RegretCurve compute_regret(const EpisodicMdp& mdp,
                           const std::vector<Policy>& policies,
                           const std::vector<int>& starts);
RegretCurve compute_regret(const EpisodicMdp& mdp,
                           const std::vector<StochasticPolicy>& policies,
                           const std::vector<int>& starts);
inline constexpr long long kExactEvalBudget = 50'000'000;

// Grid file: base keys as in a run config, plus `grid.<key> = v1, v2, ...`
// axes and `seeds = s1, s2, ...`.
struct SweepCell {
  std::map<std::string, std::string> assignment;
  std::vector<RunRecord> runs;  // seed order
  double mean = 0.0;
  double std_error = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  int best = -1;  // highest mean final metric
};

SweepResult sweep(const RunConfig& grid, int threads = 0);

// Verification fixture for the exact chain law.
struct PosteriorFixture {
  int d = 3;
  int episodes = 3;
  int points_per_episode = 4;
  double lambda = 1.0;
  int J = 20;
  double beta = 100.0;
  int replicas = 20'000;
  std::uint64_t seed = 1;
  // Multiplies the chain's step size but not the oracle's; 1 is clean.
  double chain_eta_scale = 1.0;
  MomentThresholds thresholds;

  static PosteriorFixture from_config(const RunConfig& config);
};

struct PosteriorVerification {
  ClosedFormPosterior closed_form;
  EmpiricalMoments empirical;
  TestReport report;
};

PosteriorVerification verify_posterior(const PosteriorFixture& fixture);

// One JSON object per row, each carrying the schema tag and run identity.
void write_episodes_jsonl(std::ostream& out, const RunRecord& record);
// wall_ms per row, kept apart so episodes.jsonl is reproducible.
void write_timing_jsonl(std::ostream& out, const RunRecord& record);
// Per-seed finals followed by a mean and standard-error row.
void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& records);
// Inverse of write_episodes_jsonl; a null timing stream leaves wall_ms at 0.
RunRecord parse_episodes_jsonl(std::istream& episodes,
                               std::istream* timing = nullptr);

// Writes <root>/<fingerprint>/<seed>/{episodes,timing}.jsonl and
// <root>/<fingerprint>/summary.csv plus config.txt. All records must share
// the config's fingerprint. Throws IoError.
void emit_report(const std::vector<RunRecord>& records,
                 const std::string& root, const RunConfig& config);
RunRecord load_run(const std::string& episodes_path);

// Output root: $LMC_OUT_DIR if set, else `fallback`.
std::string output_root(const std::string& fallback = "out");

}  // namespace lmcrl

#endif  // LMCRL_HARNESS_HPP_

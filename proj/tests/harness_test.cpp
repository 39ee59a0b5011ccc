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

#include "lmcrl/harness.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lmcrl/errors.hpp"

namespace lmcrl {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lmcrl_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

RunRecord without_timing(RunRecord r) {
  for (auto& row : r.rows) row.wall_ms = 0.0;
  return r;
}

RunConfig linear_config(const std::string& agent, int episodes, int seed) {
  RunConfig c;
  c.set("env", "linear_mdp");
  c.set("env.states", "4");
  c.set("env.actions", "2");
  c.set("env.horizon", "3");
  c.set("agent", agent);
  c.set("episodes", std::to_string(episodes));
  c.set("seed", std::to_string(seed));
  return c;
}

// 3 states, 2 actions, H = 2. From s0, a0 leads to s1 (worth 1 next step)
// and a1 pays 0.5 and leads to s2 (worth 0.2).
EpisodicMdp three_state_fixture() {
  Matrix p = Matrix::Zero(6, 3);
  p(0, 1) = 1.0;
  p(1, 2) = 1.0;
  p(2, 1) = p(3, 1) = 1.0;
  p(4, 2) = p(5, 2) = 1.0;
  Matrix r(3, 2);
  r << 0.0, 0.5, 1.0, 0.0, 0.2, 0.2;
  return EpisodicMdp("fixture", 3, 2, 2, {p}, {r}, Vector{{1.0, 0.0, 0.0}});
}

TEST_CASE("config text parsing") {
  const RunConfig c = RunConfig::parse(
      "# comment\n"
      "env = nchain   # trailing\n"
      "\n"
      "  agent=lmc_lsvi\n"
      "seed = 7\n");
  CHECK(c.get("env") == "nchain");
  CHECK(c.get("agent") == "lmc_lsvi");
  CHECK(c.get_int("seed", 0) == 7);
  CHECK(c.get("missing", "x") == "x");
  CHECK_THROWS_AS(c.get("missing"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("env nchain\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse(" = 3\n"), ConfigError);
}

TEST_CASE("typed getters reject malformed values") {
  RunConfig c;
  c.set("x=1.5e-3");
  c.set("n", "12");
  c.set("b", "false");
  c.set("bad", "12abc");
  c.set("inf", "inf");
  CHECK(c.get_double("x", 0) == 1.5e-3);
  CHECK(c.get_int("n", 0) == 12);
  CHECK_FALSE(c.get_bool("b", true));
  CHECK(std::isinf(c.get_double("inf", 0)));
  CHECK_THROWS_AS(c.get_double("bad", 0), ConfigError);
  CHECK_THROWS_AS(c.get_int("bad", 0), ConfigError);
  CHECK_THROWS_AS(c.get_bool("n", false), ConfigError);
  CHECK_THROWS_AS(c.set("novalue"), ConfigError);
}

TEST_CASE("fnv-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("canonical form and fingerprint") {
  RunConfig a, b;
  a.set("z", "1");
  a.set("a", "2");
  b.set("a", "2");
  b.set("z", "1");
  CHECK(a.canonical() == "a=2\nz=1\n");
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint().size() == 16);
  b.set("seed", "5");
  CHECK(a.fingerprint() == b.fingerprint());
  b.set("z", "3");
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("validation") {
  RunConfig c = linear_config("lmc_lsvi", 3, 1);
  CHECK_NOTHROW(c.validate());
  c.erase("seed");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = linear_config("nope", 3, 1);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = linear_config("lmc_lsvi", 0, 1);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = linear_config("lmc_lsvi", 3, 1);
  c.set("env", "atari");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = linear_config("lmc_lsvi", 3, 1);
  c.set("agent.J", "many");
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("schedule keys") {
  RunConfig c;
  c.set("agent.eta", "0.01");
  c.set("agent.beta", "theory");
  c.set("agent.J", "auto");
  c.set("agent.M", "auto");
  const LmcSchedule s = lmc_schedule_from_config(c);
  CHECK(s.eta_mode == ScheduleMode::kFixed);
  CHECK(s.eta == 0.01);
  CHECK(s.beta_mode == ScheduleMode::kAuto);
  CHECK(s.full_beta_constant);
  CHECK(s.j_mode == ScheduleMode::kAuto);
  CHECK(s.auto_m);
}

TEST_CASE("oracle agent has zero regret") {
  const RunRecord r = run_experiment(linear_config("oracle", 30, 2));
  REQUIRE(r.rows.size() == 30);
  CHECK(r.rows.back().cum_regret == 0.0);
  for (int k = 0; k < 30; ++k) CHECK(r.rows[k].k == k + 1);
}

TEST_CASE("regret rows are dense and cumulative regret never decreases") {
  const RunRecord r = run_experiment(linear_config("lmc_lsvi", 40, 3));
  double prev = 0.0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].k == static_cast<int>(i) + 1);
    CHECK(r.rows[i].regret >= 0.0);
    CHECK(r.rows[i].cum_regret >= prev);
    CHECK(r.rows[i].cum_regret == doctest::Approx(prev + r.rows[i].regret));
    CHECK(r.rows[i].steps == 3 * r.rows[i].k);
    prev = r.rows[i].cum_regret;
  }
}

TEST_CASE("seeded runs replay exactly") {
  const RunConfig c = linear_config("lsvi_phe", 25, 4);
  const RunRecord a = run_experiment(c), b = run_experiment(c);
  CHECK(without_timing(a) == without_timing(b));
  std::stringstream x, y;
  write_episodes_jsonl(x, a);
  write_episodes_jsonl(y, b);
  CHECK(x.str() == y.str());
  RunConfig other = c;
  other.set("seed", "5");
  CHECK_FALSE(without_timing(run_experiment(other)) == without_timing(a));
}

TEST_CASE("neural runs evaluate on cadence") {
  RunConfig c;
  c.set("env", "nchain");
  c.set("env.n", "5");
  c.set("agent", "adam_lmcdqn");
  c.set("agent.hidden", "8,8");
  c.set("steps", "300");
  c.set("eval_every", "100");
  c.set("seed", "1");
  const RunRecord a = run_experiment(c);
  REQUIRE(a.rows.size() == 3);
  CHECK(a.neural);
  CHECK(a.rows[2].steps == 300);
  CHECK(a.rows[0].value == a.rows[0].ret);
  CHECK(without_timing(a) == without_timing(run_experiment(c)));
}

TEST_CASE("regret of fixed policies") {
  const EpisodicMdp mdp = three_state_fixture();
  const PlanningSolution star = value_iteration(mdp);
  CHECK(star.v[0][0] == doctest::Approx(1.0));

  const RegretCurve zero =
      compute_regret(mdp, std::vector<Policy>(4, star.policy), {0, 0, 0, 0});
  CHECK(zero.cumulative.back() == 0.0);

  // Always a1: 0.5 + 0.2 = 0.7, gap 0.3.
  const Policy second(2, std::vector<int>(3, 1));
  const RegretCurve worse = compute_regret(mdp, {second, second}, {0, 0});
  CHECK(worse.per_episode[0] == doctest::Approx(0.3));
  CHECK(worse.cumulative[1] == doctest::Approx(0.6));
  CHECK(worse.per_episode[0] <= star.v[0][0]);

  // Uniform: V_1 = (0.5, 0.5 -> 0.5, 0.2); V_0(s0) = 0.5 * 0.5 + 0.5 * 0.7.
  const StochasticPolicy uniform(2, Matrix::Constant(3, 2, 0.5));
  const RegretCurve u = compute_regret(mdp, std::vector<StochasticPolicy>{uniform}, {0});
  CHECK(u.per_episode[0] == doctest::Approx(0.4));

  CHECK_THROWS_AS(compute_regret(mdp, {second}, {0, 0}), DimensionMismatch);
}

TEST_CASE("exact regret refuses oversized models") {
  const EpisodicMdp big = make_riverswim(400, 200);
  CHECK_THROWS_AS(compute_regret(big, std::vector<Policy>{}, {}), InfeasibleExact);
}

TEST_CASE("single-point sweep is one run") {
  RunConfig grid = linear_config("lsvi_ucb", 15, 1);
  grid.erase("seed");
  grid.set("seeds", "3");
  const SweepResult s = sweep(grid, 1);
  REQUIRE(s.cells.size() == 1);
  REQUIRE(s.cells[0].runs.size() == 1);
  CHECK(s.best == 0);
  CHECK(without_timing(s.cells[0].runs[0]) ==
        without_timing(run_experiment(linear_config("lsvi_ucb", 15, 3))));
}

TEST_CASE("grid counting, isolation and selection") {
  RunConfig grid = linear_config("lsvi_ucb", 20, 1);
  grid.erase("seed");
  grid.set("seeds", "1, 2");
  grid.set("grid.agent.bonus", "0.1, 2.0");
  const SweepResult serial = sweep(grid, 1);
  const SweepResult parallel = sweep(grid, 3);
  REQUIRE(serial.cells.size() == 2);
  int runs = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    runs += static_cast<int>(serial.cells[c].runs.size());
    for (std::size_t s = 0; s < 2; ++s) {
      RunConfig cfg = linear_config("lsvi_ucb", 20, static_cast<int>(s) + 1);
      cfg.set("agent.bonus", serial.cells[c].assignment.at("agent.bonus"));
      CHECK(without_timing(serial.cells[c].runs[s]) ==
            without_timing(run_experiment(cfg)));
      CHECK(without_timing(parallel.cells[c].runs[s]) ==
            without_timing(serial.cells[c].runs[s]));
    }
  }
  CHECK(runs == 4);
  const auto& cells = serial.cells;
  const int argmax = cells[1].mean > cells[0].mean ? 1 : 0;
  CHECK(serial.best == argmax);
  const double m0 = (cells[0].runs[0].final_metric() + cells[0].runs[1].final_metric()) / 2;
  CHECK(cells[0].mean == doctest::Approx(m0));
}

TEST_CASE("posterior verification fixture") {
  const PosteriorVerification clean = verify_posterior(PosteriorFixture{});
  CHECK(clean.report.pass);
  CHECK(clean.report.z.size() == 3);
  CHECK(clean.report.n == 20'000);
  PosteriorFixture corrupted;
  corrupted.chain_eta_scale = 2.0;
  CHECK_FALSE(verify_posterior(corrupted).report.pass);
  RunConfig over;
  over.set("replicas", "1");
  CHECK_THROWS_AS(PosteriorFixture::from_config(over), ConfigError);
}

RunRecord synthetic_record(std::uint64_t seed, double final_value) {
  RunRecord r;
  r.fingerprint = "00000000000000ab";
  r.agent = "lmc_lsvi";
  r.seed = seed;
  for (int k = 1; k <= 3; ++k) {
    EpisodeRow row;
    row.k = k;
    row.steps = 10 * k;
    row.ret = 0.1 * k + 1.0 / 3.0;
    row.value = final_value;
    row.regret = 0.25;
    row.cum_regret = 0.25 * k;
    row.wall_ms = 1.5 * k;
    r.rows.push_back(row);
  }
  return r;
}

TEST_CASE("empty reports") {
  std::stringstream csv, jsonl;
  write_summary_csv(csv, {});
  CHECK(csv.str() == "row,agent,seed,episodes,final_metric,cum_regret\n");
  write_episodes_jsonl(jsonl, RunRecord{});
  CHECK(jsonl.str().empty());
}

TEST_CASE("episode files round-trip") {
  const RunRecord r = synthetic_record(9, 0.7);
  std::stringstream episodes, timing;
  write_episodes_jsonl(episodes, r);
  write_timing_jsonl(timing, r);
  CHECK(episodes.str().find("\"schema\":\"v1\"") != std::string::npos);
  CHECK(episodes.str().find("wall_ms") == std::string::npos);
  std::stringstream e2(episodes.str()), t2(timing.str());
  CHECK(parse_episodes_jsonl(e2, &t2) == r);
  std::stringstream e3(episodes.str());
  CHECK(parse_episodes_jsonl(e3) == without_timing(r));
  std::stringstream bad("{\"schema\":\"v0\"}\n");
  CHECK_THROWS_AS(parse_episodes_jsonl(bad), IoError);
}

TEST_CASE("summary aggregates by hand") {
  const std::vector<RunRecord> rs = {synthetic_record(1, 1.0),
                                     synthetic_record(2, 2.0),
                                     synthetic_record(3, 4.0)};
  std::stringstream csv;
  write_summary_csv(csv, rs);
  std::vector<std::string> lines;
  for (std::string l; std::getline(csv, l);) lines.push_back(l);
  REQUIRE(lines.size() == 6);
  CHECK(lines[1].rfind("seed,lmc_lsvi,1,3,1,0.75", 0) == 0);
  const auto field = [](const std::string& line, int i) {
    std::stringstream ss(line);
    std::string f;
    for (int j = 0; j <= i; ++j) std::getline(ss, f, ',');
    return std::stod(f);
  };
  // Mean 7/3; sample variance 7/3, so SE = sqrt(7/9).
  CHECK(field(lines[4], 4) == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
  CHECK(field(lines[5], 4) == doctest::Approx(std::sqrt(7.0 / 9.0)).epsilon(1e-15));
  CHECK(field(lines[4], 5) == doctest::Approx(0.75));
  CHECK(field(lines[5], 5) == 0.0);
}

TEST_CASE("report files on disk") {
  const fs::path root = scratch_dir("emit");
  RunConfig c = linear_config("lsvi_ucb", 12, 1);
  std::vector<RunRecord> rs;
  for (int seed : {1, 2}) {
    c.set("seed", std::to_string(seed));
    rs.push_back(run_experiment(c));
  }
  emit_report(rs, root.string(), c);
  const fs::path dir = root / c.fingerprint();
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(read_file(dir / "config.txt").find("seed") == std::string::npos);
  const RunRecord back = load_run((dir / "1" / "episodes.jsonl").string());
  CHECK(back == rs[0]);
  const std::string first = read_file(dir / "2" / "episodes.jsonl");
  emit_report({run_experiment(c)}, root.string(), c);
  CHECK(read_file(dir / "2" / "episodes.jsonl") == first);

  RunRecord foreign = rs[0];
  foreign.fingerprint = "ffffffffffffffff";
  CHECK_THROWS_AS(emit_report({foreign}, root.string(), c), IoError);
  CHECK_THROWS_AS(load_run((root / "missing.jsonl").string()), IoError);
  fs::remove_all(root);
}

TEST_CASE("output root honours the environment") {
  ::unsetenv("LMC_OUT_DIR");
  CHECK(output_root("out") == "out");
  ::setenv("LMC_OUT_DIR", "/tmp/elsewhere", 1);
  CHECK(output_root("out") == "/tmp/elsewhere");
  ::unsetenv("LMC_OUT_DIR");
}

TEST_CASE("environment construction from keys") {
  RunConfig c;
  c.set("env", "nchain");
  c.set("env.n", "7");
  const EnvInstance chain = make_env(c);
  CHECK(chain.mdp.n_states() == 7);
  CHECK(chain.mdp.horizon() == 16);
  c.set("env", "riverswim");
  c.set("env.horizon", "11");
  const EnvInstance river = make_env(c);
  CHECK(river.mdp.horizon() == 11);
  CHECK(river.feature.dim() == 14);
  const EnvInstance lin = make_env(linear_config("oracle", 1, 1));
  CHECK(lin.feature.dim() == 8);
  c.set("env", "linear_mdp");
  c.set("env.instance", "1");
  CHECK_FALSE(make_env(c).mdp.transitions(0) == lin.mdp.transitions(0));
}

}  // namespace
}  // namespace lmcrl

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

// Command-line front end: run, sweep, verify-posterior, oracle, report.
// Exit codes: 0 success, 2 failed verification, 1 any error.

#include <glob.h>

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmcrl/errors.hpp"
#include "lmcrl/harness.hpp"

namespace {

using lmcrl::RunConfig;

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kVerificationFailed = 2;

RunConfig load_with_overrides(const std::string& path,
                              const std::vector<std::string>& sets) {
  RunConfig config = path.empty() ? RunConfig{} : RunConfig::load(path);
  for (const auto& s : sets) config.set(s);
  return config;
}

// "nchain:n=25,normalized=false" -> env = nchain, env.n = 25, ...
RunConfig env_from_spec(const std::string& spec) {
  RunConfig config;
  const auto colon = spec.find(':');
  config.set("env", spec.substr(0, colon));
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) config.set("env." + item);
    }
  }
  return config;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  return out;
}

int cmd_run(const std::string& path, const std::vector<std::string>& sets,
            const std::string& out_dir) {
  const RunConfig config = load_with_overrides(path, sets);
  const lmcrl::RunRecord rec = lmcrl::run_experiment(config);
  const std::string root = lmcrl::output_root(out_dir);
  lmcrl::emit_report({rec}, root, config);
  std::printf("%s seed=%llu rows=%zu final=%.6g cum_regret=%.6g -> %s/%s\n",
              rec.agent.c_str(), static_cast<unsigned long long>(rec.seed),
              rec.rows.size(), rec.final_metric(),
              rec.rows.empty() ? 0.0 : rec.rows.back().cum_regret, root.c_str(),
              rec.fingerprint.c_str());
  return kOk;
}

int cmd_sweep(const std::string& path, const std::vector<std::string>& sets,
              const std::string& out_dir, int threads) {
  const RunConfig grid = load_with_overrides(path, sets);
  const lmcrl::SweepResult result = lmcrl::sweep(grid, threads);
  const std::string root = lmcrl::output_root(out_dir);
  std::printf("cell,assignment,mean,se,best\n");
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const auto& cell = result.cells[c];
    std::string label;
    for (const auto& [k, v] : cell.assignment) {
      label += (label.empty() ? "" : ";") + k + "=" + v;
    }
    RunConfig cell_config;
    for (const auto& [k, v] : grid.values()) {
      if (k.rfind("grid.", 0) != 0 && k != "seeds") cell_config.set(k, v);
    }
    for (const auto& [k, v] : cell.assignment) cell_config.set(k, v);
    lmcrl::emit_report(cell.runs, root, cell_config);
    std::printf("%zu,%s,%.6g,%.6g,%d\n", c, label.c_str(), cell.mean,
                cell.std_error, static_cast<int>(c) == result.best ? 1 : 0);
  }
  return kOk;
}

int cmd_verify(const std::string& path, const std::vector<std::string>& sets) {
  const RunConfig config = load_with_overrides(path, sets);
  const auto fixture = lmcrl::PosteriorFixture::from_config(config);
  const auto result = lmcrl::verify_posterior(fixture);
  std::cout << lmcrl::to_json(result.report).dump(2) << '\n';
  return result.report.pass ? kOk : kVerificationFailed;
}

int cmd_oracle(const std::string& spec) {
  const RunConfig config = env_from_spec(spec);
  const lmcrl::EnvInstance env = lmcrl::make_env(config);
  const lmcrl::PlanningSolution sol = lmcrl::value_iteration(env.mdp);
  const int s0 = env.mdp.initial_state();
  const lmcrl::Vector& v1 = sol.v[0];
  nlohmann::json j = {{"schema", lmcrl::kSchemaVersion},
                      {"env", env.mdp.name()},
                      {"horizon", env.mdp.horizon()},
                      {"initial_state", s0},
                      {"v_star_initial", v1[s0]},
                      {"v_star_expected", env.mdp.initial().dot(v1)},
                      {"v_star", std::vector<double>(v1.data(), v1.data() + v1.size())}};
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_report(const std::string& pattern) {
  const auto paths = expand_glob(pattern);
  if (paths.empty()) throw lmcrl::IoError("no files match " + pattern);
  std::map<std::string, std::vector<lmcrl::RunRecord>> groups;
  for (const auto& p : paths) {
    lmcrl::RunRecord r = lmcrl::load_run(p);
    groups[r.fingerprint].push_back(std::move(r));
  }
  bool header = true;
  for (auto& [fp, records] : groups) {
    std::stringstream csv;
    lmcrl::write_summary_csv(csv, records);
    std::string line;
    std::getline(csv, line);
    if (header) std::cout << "fingerprint," << line << '\n';
    header = false;
    while (std::getline(csv, line)) std::cout << fp << ',' << line << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin Monte Carlo exploration experiments"};
  app.require_subcommand(1);

  std::string config_path, fixture_path, grid_path, env_spec, pattern, out_dir = "out";
  std::vector<std::string> sets;
  int threads = 0;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config_path, "Flat key = value config file")->required();
  run->add_option("--set", sets, "Override as key=value");
  run->add_option("--out", out_dir, "Output root (LMC_OUT_DIR wins)");

  auto* sw = app.add_subcommand("sweep", "Run a hyperparameter grid");
  sw->add_option("--grid", grid_path, "Grid file")->required();
  sw->add_option("--set", sets, "Override as key=value");
  sw->add_option("--out", out_dir, "Output root (LMC_OUT_DIR wins)");
  sw->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* vp = app.add_subcommand("verify-posterior",
                                "Check chain samples against the exact law");
  vp->add_option("--fixture", fixture_path, "Fixture overrides file");
  vp->add_option("--set", sets, "Override as key=value");

  auto* orc = app.add_subcommand("oracle", "Print optimal values of an env");
  orc->add_option("--env", env_spec, "e.g. nchain:n=25 or riverswim:n=12,horizon=40")
      ->required();

  auto* rep = app.add_subcommand("report", "Aggregate episodes.jsonl files");
  rep->add_option("--glob", pattern, "Pattern for episodes.jsonl files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kError;
  }

  try {
    if (*run) return cmd_run(config_path, sets, out_dir);
    if (*sw) return cmd_sweep(grid_path, sets, out_dir, threads);
    if (*vp) return cmd_verify(fixture_path, sets);
    if (*orc) return cmd_oracle(env_spec);
    if (*rep) return cmd_report(pattern);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}

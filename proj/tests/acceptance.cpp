// Copyright 2026 The unas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "unas/unas.hpp"

namespace {

using namespace unas;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("unas_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Outcome baseline_cost() {
  const auto start = std::chrono::steady_clock::now();
  const CostReport r = cost_report(decode(baseline_genome(default_space()), 3, 256));
  const double elapsed = seconds_since(start);
  const double flops_err = std::abs(r.flops_m - 18147.0) / 18147.0;
  const double mem_err = std::abs(r.memory_mib - 208.0) / 208.0;
  return {flops_err <= 0.005 && mem_err <= 0.02 && elapsed < 1.0,
          fmt("flops_m=%.3f (err %.4f%%, tol 0.5%%) memory_mib=%.3f (err %.3f%%, tol 2%%) "
              "time=%.4fs",
              r.flops_m, 100 * flops_err, r.memory_mib, 100 * mem_err, elapsed)};
}

Outcome space_size() {
  const std::uint64_t n = search_space_size(default_space());
  return {n == 8388608u, fmt("|space|=%llu expected 8388608", (unsigned long long)n)};
}

Outcome cost_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20260101);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const Genome g = random_genome(default_space(), rng);
    const CostReport r = cost_report(decode(g, 3, 256));
    const oracle::BruteCost b = oracle::brute_force_cost(g, 3, 256);
    mismatches += r.macs != b.macs || r.params != b.params;
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < 5.0,
          fmt("200 random genomes, %d mismatches vs brute-force count, time=%.3fs",
              mismatches, elapsed)};
}

Outcome tiny_space_optimum() {
  const auto start = std::chrono::steady_clock::now();
  const SearchSpace space{{64, 128}, 2, 1};
  const Genome target{{128, 64}, {1}};
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SearchConfig cfg;
    cfg.space = space;
    cfg.surrogate.target = target;
    cfg.population_size = 4;
    cfg.generations = 100;
    cfg.seed = seed;
    double best = 0.0;
    Rng noise(0);
    for (const Genome& g : oracle::enumerate_genomes(space)) {
      const double loss = surrogate_eval(g, cfg.surrogate, noise).l_gan;
      best = std::max(best, fitness_value(loss, cost_report(decode(g, 3, 256)).flops_m,
                                          cfg.gamma));
    }
    hits += *run_search(cfg).best.fitness == best;
  }
  const double elapsed = seconds_since(start);
  return {hits == 10 && elapsed < 5.0,
          fmt("|S1|=2 L_c1=2 L_c2=1 K=4 T=100: exhaustive optimum found for %d/10 seeds, "
              "time=%.2fs",
              hits, elapsed)};
}

Outcome ga_beats_random() {
  const auto start = std::chrono::steady_clock::now();
  int wins = 0;
  double ga_sum = 0, rs_sum = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SearchConfig cfg;
    cfg.gamma = 0.0;
    cfg.seed = seed;
    const SearchResult r = run_search(cfg);
    const double ga_loss = 1.0 / *r.best.fitness;
    Rng rng(derive_seed(seed, "random-search"));
    const double rs_loss = oracle::random_search_best_loss(
        cfg.space, cfg.surrogate, cfg.population_size * cfg.generations, rng);
    wins += ga_loss <= rs_loss;
    ga_sum += ga_loss;
    rs_sum += rs_loss;
  }
  const double elapsed = seconds_since(start);
  return {wins >= 18 && elapsed < 60.0,
          fmt("K=32 T=100 vs 3200 random draws: GA <= random in %d/20 seeds (need 18); "
              "mean best loss GA %.4f random %.4f; time=%.2fs",
              wins, ga_sum / 20, rs_sum / 20, elapsed)};
}

Outcome elitism_monotone() {
  const fs::path dir = scratch("elitism");
  int violations = 0, lines = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SearchConfig cfg;
    cfg.seed = seed;
    cfg.surrogate.noise_sigma = 0.05;
    RunOptions opts;
    opts.out_dir = dir;
    run_search(cfg, opts);
    std::istringstream in(slurp(dir / kHistoryFile));
    std::string line;
    double prev = 0.0;
    while (std::getline(in, line)) {
      const double f = Json::parse(line).at("best_fitness").get<double>();
      violations += f < prev;
      prev = f;
      ++lines;
    }
  }
  return {violations == 0 && lines == 5 * 101,
          fmt("5 runs, %d history lines, %d decreases of best_fitness", lines, violations)};
}

Outcome gamma_tradeoff() {
  const auto start = std::chrono::steady_clock::now();
  const double gammas[] = {0.001, 0.01, 0.1};
  double mean_flops[3] = {0, 0, 0};
  for (int gi = 0; gi < 3; ++gi) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SearchConfig cfg;
      cfg.gamma = gammas[gi];
      cfg.seed = seed;
      mean_flops[gi] += run_search(cfg).best_cost.flops_m / 10;
    }
  }
  const double elapsed = seconds_since(start);
  return {mean_flops[0] >= mean_flops[1] && mean_flops[1] >= mean_flops[2] && elapsed < 300.0,
          fmt("mean final-best flops_m over 10 seeds: gamma 0.001 -> %.1f, 0.01 -> %.1f, "
              "0.1 -> %.1f; time=%.2fs",
              mean_flops[0], mean_flops[1], mean_flops[2], elapsed)};
}

Outcome determinism_and_resume() {
  SearchConfig cfg;
  cfg.seed = 1;
  cfg.surrogate.noise_sigma = 0.05;
  const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  RunOptions oa, ob;
  oa.out_dir = a;
  ob.out_dir = b;
  const SearchResult expected = run_search(cfg, oa);
  run_search(cfg, ob);
  const bool same = slurp(a / kHistoryFile) == slurp(b / kHistoryFile);

  SearchState state = init_search(cfg);
  RunOptions first;
  first.out_dir = c;
  first.stop_at_generation = 50;
  drive_search(state, first);
  SearchState resumed = load_checkpoint(c / kCheckpointFile);
  RunOptions second;
  second.out_dir = c;
  const std::optional<SearchResult> actual = drive_search(resumed, second);
  bool resumed_same = actual.has_value() && *actual == expected;
  for (const char* f : {kHistoryFile, kBestGenomeFile, kBestArchitectureFile}) {
    resumed_same = resumed_same && slurp(a / f) == slurp(c / f);
  }
  return {same && resumed_same,
          fmt("seed 1 K=32 T=100: repeat run byte-identical=%s, interrupt at 50 + resume "
              "byte-identical=%s",
              same ? "yes" : "no", resumed_same ? "yes" : "no")};
}

Outcome protocol_robustness() {
  const std::string fixtures = std::string(UNAS_TEST_DATA_DIR) + "/fixtures/";
  EvalRequest req = make_request(SearchConfig{}, baseline_genome(default_space()));
  const EvalResponse ok = external_eval(req, "sh " + fixtures + "echo_evaluator.sh", 10);
  const EvalResponse bad = external_eval(req, "sh " + fixtures + "malformed_evaluator.sh", 10);
  const EvalResponse nan = external_eval(req, "sh " + fixtures + "nan_evaluator.sh", 10);
  const EvalResponse slow = external_eval(req, "sh " + fixtures + "slow_evaluator.sh", 0.5);
  bool pass = ok == EvalResponse{0.7, 0.002, EvalStatus::kOk, ""} &&
              bad.message.starts_with("malformed-response") &&
              nan.message.starts_with("non-finite-loss") &&
              slow.message.starts_with("timeout");
  // A search whose every evaluation fails still completes, fully penalized.
  int completed = 0;
  for (const char* script : {"malformed_evaluator.sh", "nan_evaluator.sh", "slow_evaluator.sh"}) {
    SearchConfig cfg;
    cfg.population_size = 4;
    cfg.generations = 2;
    cfg.evaluator = EvaluatorKind::kExternal;
    cfg.external.command = "sh " + fixtures + script;
    cfg.external.timeout_s = 0.3;
    cfg.external.parallelism = 4;
    const SearchResult r = run_search(cfg);
    completed += r.history.size() == 3 && r.best.penalized &&
                 *r.best.fitness == kPenaltyFitness;
  }
  pass = pass && completed == 3;
  return {pass, fmt("ok=%s malformed=%s non-finite=%s timeout=%s; penalized searches "
                    "completed %d/3",
                    ok.ok() ? "ok" : ok.message.c_str(), bad.message.substr(0, 18).c_str(),
                    nan.message.substr(0, 15).c_str(), slow.message.substr(0, 7).c_str(),
                    completed)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"baseline-cost", baseline_cost},
      {"search-space-size", space_size},
      {"cost-oracle-agreement", cost_oracle},
      {"tiny-space-optimum", tiny_space_optimum},
      {"ga-vs-random-search", ga_beats_random},
      {"elitism-monotonicity", elitism_monotone},
      {"gamma-tradeoff", gamma_tradeoff},
      {"determinism-and-resume", determinism_and_resume},
      {"protocol-robustness", protocol_robustness},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}

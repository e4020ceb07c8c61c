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

// unas: command-line front end for the U-Net architecture search engine.
//
// Exit codes: 0 success, 2 configuration / input errors, 3 checkpoint I/O.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "unas/unas.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCheckpoint = 3;

int exit_code_for(const unas::Error& e) {
  switch (e.code()) {
    case unas::ErrorCode::kCheckpointIo:
    case unas::ErrorCode::kCorruptCheckpoint:
      return kExitCheckpoint;
    default:
      return kExitConfig;
  }
}

struct GenomeArgs {
  std::string genome;
  bool baseline = false;
  int channels = 3;
  int resolution = 256;
  std::string format = "text";
};

void add_genome_args(CLI::App* cmd, GenomeArgs& args) {
  auto* genome = cmd->add_option("--genome", args.genome,
                                 "Genome in canonical form \"c1,...|s1,...\"");
  auto* baseline =
      cmd->add_flag("--baseline", args.baseline, "Use the original U-Net genome");
  genome->excludes(baseline);
  cmd->add_option("--channels", args.channels, "Image channels")->capture_default_str();
  cmd->add_option("--resolution", args.resolution, "Square image side in pixels")
      ->capture_default_str();
  cmd->add_option("--format", args.format, "Output format")
      ->check(CLI::IsMember({"text", "document"}))
      ->capture_default_str();
}

unas::ArchitectureGraph graph_from(const GenomeArgs& args) {
  const unas::SearchSpace space = unas::default_space();
  if (!args.baseline && args.genome.empty()) {
    throw unas::Error(unas::ErrorCode::kMalformedSyntax,
                      "one of --genome or --baseline is required");
  }
  const unas::Genome g = args.baseline ? unas::baseline_genome(space)
                                       : unas::parse_genome(args.genome, space);
  return unas::decode(g, args.channels, args.resolution);
}

void print_layer_table(const unas::ArchitectureGraph& a,
                       const unas::CostReport* cost) {
  std::printf("genome %s\n", unas::format_genome(a.source_genome).c_str());
  std::printf("%-4s %-9s %6s %6s %6s %6s", "name", "kind", "in_ch", "out_ch",
              "in_res", "out_res");
  if (cost) std::printf(" %16s %12s", "macs", "params");
  std::printf("\n");
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const unas::LayerSpec& l = a.layers[i];
    std::printf("%-4s %-9s %6d %6d %6d %6d", l.name().c_str(),
                unas::layer_kind_name(l.kind), l.in_channels, l.out_channels,
                l.in_resolution, l.out_resolution);
    if (cost) {
      std::printf(" %16llu %12llu",
                  static_cast<unsigned long long>(cost->layers[i].macs),
                  static_cast<unsigned long long>(cost->layers[i].params));
    }
    std::printf("\n");
  }
  std::string skips;
  for (int s : a.skips) skips += std::to_string(s);
  std::printf("skips %s\n", skips.c_str());
}

int run_decode(const GenomeArgs& args) {
  const unas::ArchitectureGraph a = graph_from(args);
  if (args.format == "document") {
    std::cout << unas::export_architecture(a).dump(2) << "\n";
  } else {
    print_layer_table(a, nullptr);
  }
  return kExitOk;
}

int run_cost(const GenomeArgs& args) {
  const unas::ArchitectureGraph a = graph_from(args);
  const unas::CostReport cost = unas::cost_report(a);
  if (args.format == "document") {
    unas::Json doc = unas::export_architecture(a);
    doc["cost"] = unas::cost_to_json(cost);
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
  }
  print_layer_table(a, &cost);
  std::printf("flops_m %.6f\n", cost.flops_m);
  std::printf("params %llu\n", static_cast<unsigned long long>(cost.params));
  std::printf("memory_mib %.6f\n", cost.memory_mib);
  return kExitOk;
}

struct SearchArgs {
  std::string config_path;
  std::optional<double> gamma;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<int> pop;
  std::optional<int> gens;
  std::optional<std::string> evaluator;
  std::optional<std::string> target;
  std::optional<double> noise_sigma;
  std::optional<double> timeout;
  std::optional<int> parallelism;
  std::optional<int> mini_epochs;
  std::optional<int> batch_size;
  std::optional<std::string> train_path;
  std::optional<std::string> val_path;
  std::optional<int> checkpoint_every;
  std::optional<int> stop_after;
  std::string out;
  bool quiet = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw unas::Error(unas::ErrorCode::kConfigInvalid, "cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

unas::SearchConfig build_config(const SearchArgs& args) {
  unas::SearchConfig cfg;
  if (!args.config_path.empty()) {
    unas::Json doc;
    try {
      doc = unas::Json::parse(read_file(args.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw unas::Error(unas::ErrorCode::kConfigInvalid, e.what());
    }
    cfg = unas::config_from_json(doc);
  }
  if (args.gamma) cfg.gamma = *args.gamma;
  if (args.lambda) cfg.lambda = *args.lambda;
  if (args.seed) cfg.seed = *args.seed;
  if (args.pop) cfg.population_size = *args.pop;
  if (args.gens) cfg.generations = *args.gens;
  if (args.checkpoint_every) cfg.checkpoint_every = *args.checkpoint_every;
  if (args.evaluator) {
    const std::string& e = *args.evaluator;
    if (e == "surrogate") {
      cfg.evaluator = unas::EvaluatorKind::kSurrogate;
    } else if (e.starts_with("external:") && e.size() > 9) {
      cfg.evaluator = unas::EvaluatorKind::kExternal;
      cfg.external.command = e.substr(9);
    } else {
      throw unas::Error(unas::ErrorCode::kConfigInvalid,
                        "--evaluator must be 'surrogate' or 'external:<command>'");
    }
  }
  if (args.target) cfg.surrogate.target = unas::parse_genome(*args.target, cfg.space);
  if (args.noise_sigma) cfg.surrogate.noise_sigma = *args.noise_sigma;
  if (args.timeout) cfg.external.timeout_s = *args.timeout;
  if (args.parallelism) cfg.external.parallelism = *args.parallelism;
  if (args.mini_epochs) cfg.external.train_budget.mini_epochs = *args.mini_epochs;
  if (args.batch_size) cfg.external.train_budget.batch_size = *args.batch_size;
  if (args.train_path) cfg.external.dataset.train_path = *args.train_path;
  if (args.val_path) cfg.external.dataset.val_path = *args.val_path;
  unas::validate_config(cfg);
  return cfg;
}

void print_effective_config(const unas::SearchConfig& cfg) {
  std::printf("effective config: gamma=%g lambda=%g K=%d T=%d seed=%llu\n",
              cfg.gamma, cfg.lambda, cfg.population_size, cfg.generations,
              static_cast<unsigned long long>(cfg.seed));
  std::cout << unas::config_to_json(cfg).dump(2) << "\n" << std::flush;
}

int drive(unas::SearchState& state, const std::string& out,
          std::optional<int> stop_after, bool quiet) {
  unas::RunOptions options;
  options.out_dir = out;
  if (stop_after) options.stop_at_generation = *stop_after;
  if (!quiet) {
    options.on_generation = [](const unas::GenerationRecord& r) {
      std::printf("generation %d best_fitness %.9g mean_fitness %.9g evaluations %d best %s\n",
                  r.generation, r.best_fitness, r.mean_fitness, r.evaluations_used,
                  r.best_genome.c_str());
      std::fflush(stdout);
    };
  }
  const auto result = unas::drive_search(state, options);
  if (!result) {
    std::printf("stopped at generation %d; checkpoint in %s\n",
                state.population.generation, out.c_str());
    return kExitOk;
  }
  std::printf("best %s fitness %.9g flops_m %.3f memory_mib %.3f\n",
              unas::format_genome(result->best.genome).c_str(), *result->best.fitness,
              result->best_cost.flops_m, result->best_cost.memory_mib);
  return kExitOk;
}

int run_search_cmd(const SearchArgs& args) {
  unas::SearchConfig cfg;
  try {
    cfg = build_config(args);
  } catch (const unas::Error& e) {
    std::fprintf(stderr, "unas search: %s\n", e.what());
    return kExitConfig;
  }
  print_effective_config(cfg);
  unas::SearchState state = unas::init_search(cfg);
  return drive(state, args.out, args.stop_after, args.quiet);
}

int run_resume(const std::string& out, std::optional<int> stop_after, bool quiet) {
  unas::SearchState state =
      unas::load_checkpoint(std::filesystem::path(out) / unas::kCheckpointFile);
  print_effective_config(state.config);
  std::printf("resuming at generation %d\n", state.population.generation);
  return drive(state, out, stop_after, quiet);
}

int run_export_best(const std::string& run, bool request) {
  const std::filesystem::path dir(run);
  const unas::SearchState state = unas::load_checkpoint(dir / unas::kCheckpointFile);
  std::ifstream in(dir / unas::kHistoryFile);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  if (last.empty()) {
    throw unas::Error(unas::ErrorCode::kCheckpointIo,
                      "no evaluated generation in " + (dir / unas::kHistoryFile).string());
  }
  unas::GenerationRecord record;
  try {
    record = unas::record_from_json(unas::Json::parse(last));
  } catch (const nlohmann::json::exception& e) {
    throw unas::Error(unas::ErrorCode::kCorruptCheckpoint, e.what());
  }
  const unas::SearchConfig& cfg = state.config;
  const unas::Genome best = unas::parse_genome(record.best_genome, cfg.space);
  if (request) {
    std::cout << unas::request_to_json(unas::make_request(cfg, best)).dump(2) << "\n";
  } else {
    std::cout << unas::export_architecture(
                     unas::decode(best, cfg.image_channels, cfg.image_resolution))
                     .dump(2)
              << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary architecture search for U-Net image translators"};
  app.require_subcommand(1);

  auto* spacesize = app.add_subcommand("spacesize", "Print the number of genomes in the search space");
  std::string spacesize_config;
  spacesize->add_option("--config", spacesize_config, "Config file whose space to measure");

  app.add_subcommand("baseline", "Print the original U-Net genome");

  GenomeArgs decode_args;
  auto* decode_cmd = app.add_subcommand("decode", "Expand a genome into its layer table");
  add_genome_args(decode_cmd, decode_args);

  GenomeArgs cost_args;
  auto* cost_cmd = app.add_subcommand("cost", "Analytic FLOPs, parameters and memory");
  add_genome_args(cost_cmd, cost_args);

  SearchArgs search_args;
  auto* search = app.add_subcommand("search", "Run the evolutionary search");
  search->add_option("--config", search_args.config_path, "JSON config file; flags override it");
  search->add_option("--gamma", search_args.gamma, "FLOPs weight in the fitness");
  search->add_option("--lambda", search_args.lambda, "L1 weight in the generator loss");
  search->add_option("--seed", search_args.seed, "Run seed");
  search->add_option("--pop", search_args.pop, "Population size K");
  search->add_option("--gens", search_args.gens, "Generations T");
  search->add_option("--evaluator", search_args.evaluator, "surrogate | external:<command>");
  search->add_option("--target", search_args.target, "Surrogate optimum genome");
  search->add_option("--noise-sigma", search_args.noise_sigma, "Surrogate noise sigma");
  search->add_option("--timeout", search_args.timeout, "External evaluator timeout (s)");
  search->add_option("--parallelism", search_args.parallelism, "Concurrent evaluator processes");
  search->add_option("--mini-epochs", search_args.mini_epochs, "Mini-train epochs per request");
  search->add_option("--batch-size", search_args.batch_size, "Mini-train batch size");
  search->add_option("--train-path", search_args.train_path, "Mini train set path");
  search->add_option("--val-path", search_args.val_path, "Mini validation set path");
  search->add_option("--checkpoint-every", search_args.checkpoint_every, "Checkpoint period (generations)");
  search->add_option("--stop-after", search_args.stop_after, "Stop at this generation, leaving a checkpoint");
  search->add_option("--out", search_args.out, "Output directory")->required();
  search->add_flag("--quiet", search_args.quiet, "No per-generation lines");

  std::string resume_out;
  std::optional<int> resume_stop;
  bool resume_quiet = false;
  auto* resume = app.add_subcommand("resume", "Continue a run from its checkpoint");
  resume->add_option("--out", resume_out, "Output directory of the run")->required();
  resume->add_option("--stop-after", resume_stop, "Stop at this generation");
  resume->add_flag("--quiet", resume_quiet, "No per-generation lines");

  std::string export_run;
  bool export_request = false;
  auto* export_best = app.add_subcommand("export-best", "Print the best architecture of a run");
  export_best->add_option("--run", export_run, "Output directory of the run")->required();
  export_best->add_flag("--request", export_request, "Print a fine-tuning request instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const CLI::App* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return kExitConfig;
  }

  try {
    if (*spacesize) {
      unas::SearchSpace space = unas::default_space();
      if (!spacesize_config.empty()) {
        space = unas::config_from_json(unas::Json::parse(read_file(spacesize_config))).space;
      }
      std::printf("%llu\n",
                  static_cast<unsigned long long>(unas::search_space_size(space)));
      return kExitOk;
    }
    if (app.got_subcommand("baseline")) {
      std::printf("%s\n",
                  unas::format_genome(unas::baseline_genome(unas::default_space())).c_str());
      return kExitOk;
    }
    if (*decode_cmd) return run_decode(decode_args);
    if (*cost_cmd) return run_cost(cost_args);
    if (*search) return run_search_cmd(search_args);
    if (*resume) return run_resume(resume_out, resume_stop, resume_quiet);
    if (*export_best) return run_export_best(export_run, export_request);
  } catch (const unas::Error& e) {
    std::fprintf(stderr, "unas: %s\n", e.what());
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "unas: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}

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

// End-to-end evolutionary search.
//
//   P_0 <- K random genomes
//   for t = 1..T:
//     evaluate P_{t-1} (decode -> cost -> evaluator -> fitness), log it
//     P_t <- next_generation(P_{t-1})          // elitism in slot 0
//   evaluate P_T, log it, return its best individual
//
// Evaluator responses are cached by canonical genome string for the whole
// run, so the elite copy is never evaluated twice. The full loop state
// (population, rng, history, cache) serializes to a checkpoint document and
// a resumed run replays exactly what the uninterrupted run would have done.

#ifndef UNAS_SEARCHLOOP_HPP_
#define UNAS_SEARCHLOOP_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "unas/costmodel.hpp"
#include "unas/decoder.hpp"
#include "unas/error.hpp"
#include "unas/evolution.hpp"
#include "unas/fitness.hpp"
#include "unas/genome.hpp"
#include "unas/protocol.hpp"
#include "unas/rng.hpp"

namespace unas {

enum class EvaluatorKind { kSurrogate, kExternal };

struct ExternalSettings {
  std::string command;
  double timeout_s = 3600.0;
  int parallelism = 1;
  TrainBudget train_budget;
  DatasetPaths dataset;

  friend bool operator==(const ExternalSettings&, const ExternalSettings&) = default;
};

struct SearchConfig {
  SearchSpace space = default_space();
  int population_size = 32;
  int generations = 100;
  double gamma = 0.01;
  double lambda = kDefaultLambda;
  OperatorConfig operators;
  std::uint64_t seed = 0;
  EvaluatorKind evaluator = EvaluatorKind::kSurrogate;
  SurrogateConfig surrogate{baseline_genome(default_space())};
  ExternalSettings external;
  int image_channels = 3;
  int image_resolution = 256;
  int checkpoint_every = 1;

  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

inline void validate_config(const SearchConfig& cfg) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kConfigInvalid, what);
  };
  try {
    validate_space(cfg.space);
  } catch (const Error& e) {
    fail(e.what());
  }
  if (cfg.population_size < 2) fail("population_size must be >= 2");
  if (cfg.generations < 1) fail("generations must be >= 1");
  if (!(cfg.gamma >= 0) || !std::isfinite(cfg.gamma)) fail("gamma must be >= 0");
  if (!(cfg.lambda >= 0) || !std::isfinite(cfg.lambda)) fail("lambda must be >= 0");
  if (cfg.checkpoint_every < 1) fail("checkpoint_every must be >= 1");
  validate_operators(cfg.operators);
  if (cfg.evaluator == EvaluatorKind::kSurrogate) {
    if (!is_valid_genome(cfg.surrogate.target, cfg.space)) {
      fail("surrogate target is not a genome of the configured space");
    }
    if (!(cfg.surrogate.noise_sigma >= 0)) fail("noise_sigma must be >= 0");
  } else {
    const ExternalSettings& ext = cfg.external;
    if (ext.command.empty()) fail("external evaluator command is empty");
    if (!(ext.timeout_s > 0)) fail("timeout_s must be > 0");
    if (ext.parallelism < 1) fail("parallelism must be >= 1");
    if (ext.train_budget.mini_epochs < 1) fail("mini_epochs must be >= 1");
    if (ext.train_budget.batch_size < 1) fail("batch_size must be >= 1");
  }
  try {
    Genome probe;
    probe.channel_code.assign(cfg.space.channel_code_length,
                              cfg.space.channel_choices.front());
    probe.skip_code.assign(cfg.space.skip_code_length, 0);
    decode(probe, cfg.image_channels, cfg.image_resolution);
  } catch (const Error& e) {
    fail(e.what());
  }
}

// ---------------------------------------------------------------------------
// Config documents

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::kConfigInvalid, where + " must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) {
      throw Error(ErrorCode::kConfigInvalid, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_if(const Json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

inline Json config_to_json(const SearchConfig& cfg) {
  Json evaluator;
  if (cfg.evaluator == EvaluatorKind::kSurrogate) {
    evaluator = Json{{"kind", "surrogate"},
                     {"target", format_genome(cfg.surrogate.target)},
                     {"noise_sigma", cfg.surrogate.noise_sigma},
                     {"base", cfg.surrogate.base},
                     {"skip_weight", cfg.surrogate.skip_weight},
                     {"channel_weight", cfg.surrogate.channel_weight}};
  } else {
    const ExternalSettings& ext = cfg.external;
    evaluator = Json{{"kind", "external"},
                     {"command", ext.command},
                     {"timeout_s", ext.timeout_s},
                     {"parallelism", ext.parallelism},
                     {"mini_epochs", ext.train_budget.mini_epochs},
                     {"batch_size", ext.train_budget.batch_size},
                     {"train_path", ext.dataset.train_path},
                     {"val_path", ext.dataset.val_path}};
  }
  return Json{{"space",
               {{"channel_choices", cfg.space.channel_choices},
                {"channel_code_length", cfg.space.channel_code_length},
                {"skip_code_length", cfg.space.skip_code_length}}},
              {"population_size", cfg.population_size},
              {"generations", cfg.generations},
              {"gamma", cfg.gamma},
              {"lambda", cfg.lambda},
              {"operators",
               {{"select", cfg.operators.select},
                {"crossover", cfg.operators.crossover},
                {"mutate", cfg.operators.mutate}}},
              {"seed", cfg.seed},
              {"evaluator", std::move(evaluator)},
              {"image",
               {{"channels", cfg.image_channels},
                {"resolution", cfg.image_resolution}}},
              {"checkpoint_every", cfg.checkpoint_every}};
}

/// Missing keys keep their defaults; unknown keys are rejected. The result
/// is validated.
inline SearchConfig config_from_json(const Json& j) {
  using detail::check_keys;
  using detail::read_if;
  SearchConfig cfg;
  try {
    check_keys(j,
               {"space", "population_size", "generations", "gamma", "lambda",
                "operators", "seed", "evaluator", "image", "checkpoint_every"},
               "config");
    if (j.contains("space")) {
      const Json& s = j.at("space");
      check_keys(s, {"channel_choices", "channel_code_length", "skip_code_length"},
                 "space");
      read_if(s, "channel_choices", cfg.space.channel_choices);
      read_if(s, "channel_code_length", cfg.space.channel_code_length);
      read_if(s, "skip_code_length", cfg.space.skip_code_length);
    }
    read_if(j, "population_size", cfg.population_size);
    read_if(j, "generations", cfg.generations);
    read_if(j, "gamma", cfg.gamma);
    read_if(j, "lambda", cfg.lambda);
    read_if(j, "seed", cfg.seed);
    read_if(j, "checkpoint_every", cfg.checkpoint_every);
    if (j.contains("operators")) {
      const Json& o = j.at("operators");
      check_keys(o, {"select", "crossover", "mutate"}, "operators");
      read_if(o, "select", cfg.operators.select);
      read_if(o, "crossover", cfg.operators.crossover);
      read_if(o, "mutate", cfg.operators.mutate);
    }
    if (j.contains("image")) {
      const Json& im = j.at("image");
      check_keys(im, {"channels", "resolution"}, "image");
      read_if(im, "channels", cfg.image_channels);
      read_if(im, "resolution", cfg.image_resolution);
    }
    if (cfg.space != default_space()) {
      // The default target only exists for the default space.
      cfg.surrogate.target = Genome{};
    }
    if (j.contains("evaluator")) {
      const Json& e = j.at("evaluator");
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "surrogate") {
        check_keys(e, {"kind", "target", "noise_sigma", "base", "skip_weight",
                       "channel_weight"},
                   "evaluator");
        cfg.evaluator = EvaluatorKind::kSurrogate;
        validate_space(cfg.space);
        if (e.contains("target")) {
          cfg.surrogate.target =
              parse_genome(e.at("target").get<std::string>(), cfg.space);
        }
        read_if(e, "noise_sigma", cfg.surrogate.noise_sigma);
        read_if(e, "base", cfg.surrogate.base);
        read_if(e, "skip_weight", cfg.surrogate.skip_weight);
        read_if(e, "channel_weight", cfg.surrogate.channel_weight);
      } else if (kind == "external") {
        check_keys(e, {"kind", "command", "timeout_s", "parallelism", "mini_epochs",
                       "batch_size", "train_path", "val_path"},
                   "evaluator");
        cfg.evaluator = EvaluatorKind::kExternal;
        ExternalSettings& ext = cfg.external;
        read_if(e, "command", ext.command);
        read_if(e, "timeout_s", ext.timeout_s);
        read_if(e, "parallelism", ext.parallelism);
        read_if(e, "mini_epochs", ext.train_budget.mini_epochs);
        read_if(e, "batch_size", ext.train_budget.batch_size);
        read_if(e, "train_path", ext.dataset.train_path);
        read_if(e, "val_path", ext.dataset.val_path);
      } else {
        throw Error(ErrorCode::kConfigInvalid, "unknown evaluator kind '" + kind + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigInvalid) throw;
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }
  validate_config(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Loop state

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::string best_genome;
  int evaluations_used = 0;

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

inline Json record_to_json(const GenerationRecord& r) {
  return Json{{"generation", r.generation},
              {"best_fitness", r.best_fitness},
              {"mean_fitness", r.mean_fitness},
              {"best_genome", r.best_genome},
              {"evaluations_used", r.evaluations_used}};
}

inline GenerationRecord record_from_json(const Json& j) {
  return GenerationRecord{j.at("generation").get<int>(),
                          j.at("best_fitness").get<double>(),
                          j.at("mean_fitness").get<double>(),
                          j.at("best_genome").get<std::string>(),
                          j.at("evaluations_used").get<int>()};
}

struct SearchState {
  SearchConfig config;
  Population population;
  Rng rng;
  std::vector<GenerationRecord> history;
  std::map<std::string, EvalResponse> cache;

  friend bool operator==(const SearchState&, const SearchState&) = default;
};

struct SearchResult {
  Individual best;
  ArchitectureGraph best_architecture;
  CostReport best_cost;
  std::vector<GenerationRecord> history;

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

inline SearchState init_search(const SearchConfig& cfg) {
  validate_config(cfg);
  SearchState state;
  state.config = cfg;
  state.rng = Rng(derive_seed(cfg.seed, "population"));
  state.population.generation = 0;
  state.population.individuals.reserve(cfg.population_size);
  for (int i = 0; i < cfg.population_size; ++i) {
    state.population.individuals.push_back(
        Individual{random_genome(cfg.space, state.rng), {}, {}, false});
  }
  return state;
}

inline std::unique_ptr<Evaluator> make_evaluator(const SearchConfig& cfg) {
  if (cfg.evaluator == EvaluatorKind::kSurrogate) {
    return std::make_unique<SurrogateEvaluator>(cfg.surrogate, cfg.space);
  }
  return std::make_unique<ExternalEvaluator>(
      cfg.external.command, cfg.external.timeout_s, cfg.external.parallelism);
}

/// The request seed depends only on the run seed and the genome, so a
/// genome's evaluation does not depend on when or where it happens.
inline EvalRequest make_request(const SearchConfig& cfg, const Genome& g) {
  EvalRequest r;
  r.genome = format_genome(g);
  r.architecture =
      export_architecture(decode(g, cfg.image_channels, cfg.image_resolution));
  r.lambda = cfg.lambda;
  r.train_budget = cfg.external.train_budget;
  r.dataset = cfg.external.dataset;
  r.seed = derive_seed(cfg.seed, r.genome);
  return r;
}

/// Assigns fitness to every individual of the current population, querying
/// the evaluator only for genomes not yet in the cache. Returns the number
/// of evaluator calls.
inline int evaluate_population(SearchState& state, Evaluator& evaluator) {
  const SearchConfig& cfg = state.config;
  std::vector<EvalRequest> requests;
  std::map<std::string, bool> pending;
  for (const Individual& ind : state.population.individuals) {
    const std::string key = format_genome(ind.genome);
    if (state.cache.contains(key) || pending.contains(key)) continue;
    pending[key] = true;
    requests.push_back(make_request(cfg, ind.genome));
  }
  if (!requests.empty()) {
    std::vector<EvalResponse> responses = evaluator.evaluate(requests);
    for (std::size_t i = 0; i < requests.size(); ++i) {
      state.cache[requests[i].genome] = std::move(responses.at(i));
    }
  }
  for (Individual& ind : state.population.individuals) {
    const CostReport cost =
        cost_report(decode(ind.genome, cfg.image_channels, cfg.image_resolution));
    ind = evaluate_individual(std::move(ind), state.cache.at(format_genome(ind.genome)),
                              cost, cfg.gamma, cfg.lambda);
  }
  return static_cast<int>(requests.size());
}

inline GenerationRecord summarize(const Population& pop, int evaluations_used) {
  GenerationRecord r;
  r.generation = pop.generation;
  const std::size_t best = best_index(pop);
  r.best_fitness = *pop.individuals[best].fitness;
  r.best_genome = format_genome(pop.individuals[best].genome);
  double total = 0.0;
  for (const Individual& ind : pop.individuals) total += *ind.fitness;
  r.mean_fitness = total / static_cast<double>(pop.individuals.size());
  r.evaluations_used = evaluations_used;
  return r;
}

inline bool search_finished_stepping(const SearchState& state) {
  return state.population.generation >= state.config.generations;
}

/// Evaluates P_{t-1}, logs it, and replaces it with P_t.
inline const GenerationRecord& step_generation(SearchState& state,
                                               Evaluator& evaluator) {
  const int used = evaluate_population(state, evaluator);
  state.history.push_back(summarize(state.population, used));
  state.population = next_generation(state.population, state.config.operators,
                                     state.config.space, state.rng);
  return state.history.back();
}

/// Evaluates P_T, logs it, and returns its best individual.
inline SearchResult finish_search(SearchState& state, Evaluator& evaluator) {
  const int used = evaluate_population(state, evaluator);
  state.history.push_back(summarize(state.population, used));
  const SearchConfig& cfg = state.config;
  SearchResult result;
  result.best = state.population.individuals[best_index(state.population)];
  result.best_architecture =
      decode(result.best.genome, cfg.image_channels, cfg.image_resolution);
  result.best_cost = cost_report(result.best_architecture);
  result.history = state.history;
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::string_view kCheckpointFormat = "unas-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline std::string hash_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string("fnv1a64:") + buf;
}

inline Json checkpoint_to_json(const SearchState& state) {
  Json population = Json::array();
  for (const Individual& ind : state.population.individuals) {
    population.push_back(
        Json{{"genome", format_genome(ind.genome)},
             {"fitness", ind.fitness ? Json(*ind.fitness) : Json(nullptr)},
             {"penalized", ind.penalized},
             {"eval_record",
              ind.eval_record ? response_to_json(*ind.eval_record) : Json(nullptr)}});
  }
  Json history = Json::array();
  for (const GenerationRecord& r : state.history) history.push_back(record_to_json(r));
  Json cache = Json::object();
  for (const auto& [key, response] : state.cache) {
    cache[key] = response_to_json(response);
  }
  Json payload{{"config", config_to_json(state.config)},
               {"generation", state.population.generation},
               {"population", std::move(population)},
               {"rng", state.rng.state()},
               {"history", std::move(history)},
               {"cache", std::move(cache)}};
  const std::string digest = hash_hex(payload.dump());
  return Json{{"format", kCheckpointFormat},
              {"version", kCheckpointVersion},
              {"hash", digest},
              {"payload", std::move(payload)}};
}

inline SearchState checkpoint_from_json(const Json& doc) {
  auto corrupt = [](const std::string& what) {
    return Error(ErrorCode::kCorruptCheckpoint, what);
  };
  try {
    if (!doc.is_object() || doc.value("format", "") != kCheckpointFormat) {
      throw corrupt("not a checkpoint document");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw corrupt("unsupported checkpoint version");
    }
    const Json& payload = doc.at("payload");
    if (doc.at("hash").get<std::string>() != hash_hex(payload.dump())) {
      throw corrupt("hash mismatch");
    }
    SearchState state;
    state.config = config_from_json(payload.at("config"));
    state.population.generation = payload.at("generation").get<int>();
    for (const Json& j : payload.at("population")) {
      Individual ind;
      ind.genome = parse_genome(j.at("genome").get<std::string>(), state.config.space);
      if (!j.at("fitness").is_null()) ind.fitness = j.at("fitness").get<double>();
      ind.penalized = j.at("penalized").get<bool>();
      if (!j.at("eval_record").is_null()) {
        ind.eval_record = response_from_json(j.at("eval_record"));
      }
      state.population.individuals.push_back(std::move(ind));
    }
    if (state.population.individuals.size() !=
        static_cast<std::size_t>(state.config.population_size)) {
      throw corrupt("population size differs from config");
    }
    if (!Rng::from_state(payload.at("rng").get<std::string>(), state.rng)) {
      throw corrupt("unreadable rng state");
    }
    for (const Json& r : payload.at("history")) {
      state.history.push_back(record_from_json(r));
    }
    for (const auto& [key, value] : payload.at("cache").items()) {
      state.cache[key] = response_from_json(value);
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptCheckpoint) throw;
    throw corrupt(e.what());
  }
}

/// Writes to a sibling temp file and renames it into place, so an existing
/// checkpoint survives a failed write.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kCheckpointIo, "cannot open " + tmp.string());
    }
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::kCheckpointIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::kCheckpointIo,
                "cannot replace " + path.string() + ": " + ec.message());
  }
}

inline void save_checkpoint(const std::filesystem::path& path,
                            const SearchState& state) {
  write_file_atomic(path, checkpoint_to_json(state).dump(1) + "\n");
}

inline SearchState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kCheckpointIo, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, e.what());
  }
  return checkpoint_from_json(doc);
}

// ---------------------------------------------------------------------------
// Driver

/// Files written into an output directory.
inline constexpr const char* kHistoryFile = "history.jsonl";
inline constexpr const char* kCheckpointFile = "checkpoint.json";
inline constexpr const char* kBestArchitectureFile = "best_architecture.json";
inline constexpr const char* kBestGenomeFile = "best_genome.txt";
inline constexpr const char* kFinetuneRequestFile = "finetune_request.json";

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const GenerationRecord&)> on_generation;
  /// Stop (after checkpointing) once the population reaches this generation.
  std::optional<int> stop_at_generation;
  /// Overrides the evaluator built from the config.
  Evaluator* evaluator = nullptr;
};

inline std::string history_jsonl(const std::vector<GenerationRecord>& history) {
  std::string out;
  for (const GenerationRecord& r : history) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline void write_history(const std::filesystem::path& dir,
                          const std::vector<GenerationRecord>& history) {
  write_file_atomic(dir / kHistoryFile, history_jsonl(history));
}

inline void write_outputs(const std::filesystem::path& dir, const SearchConfig& cfg,
                          const SearchResult& result) {
  write_history(dir, result.history);
  write_file_atomic(dir / kBestArchitectureFile,
                    export_architecture(result.best_architecture).dump(2) + "\n");
  write_file_atomic(dir / kBestGenomeFile, format_genome(result.best.genome) + "\n");
  write_file_atomic(dir / kFinetuneRequestFile,
                    request_to_json(make_request(cfg, result.best.genome)).dump(2) +
                        "\n");
}

/// Runs `state` forward to completion, or until options.stop_at_generation.
/// Returns nullopt when stopped early.
inline std::optional<SearchResult> drive_search(SearchState& state,
                                                const RunOptions& options = {}) {
  std::unique_ptr<Evaluator> owned;
  Evaluator* evaluator = options.evaluator;
  if (!evaluator) {
    owned = make_evaluator(state.config);
    evaluator = owned.get();
  }
  if (options.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*options.out_dir, ec);
    if (ec) {
      throw Error(ErrorCode::kCheckpointIo,
                  "cannot create " + options.out_dir->string() + ": " + ec.message());
    }
    save_checkpoint(*options.out_dir / kCheckpointFile, state);
  }
  while (!search_finished_stepping(state)) {
    if (options.stop_at_generation &&
        state.population.generation >= *options.stop_at_generation) {
      if (options.out_dir) save_checkpoint(*options.out_dir / kCheckpointFile, state);
      return std::nullopt;
    }
    const GenerationRecord& record = step_generation(state, *evaluator);
    if (options.on_generation) options.on_generation(record);
    if (options.out_dir) {
      write_history(*options.out_dir, state.history);
      if (state.population.generation % state.config.checkpoint_every == 0) {
        save_checkpoint(*options.out_dir / kCheckpointFile, state);
      }
    }
  }
  SearchResult result = finish_search(state, *evaluator);
  if (options.on_generation) options.on_generation(result.history.back());
  if (options.out_dir) write_outputs(*options.out_dir, state.config, result);
  return result;
}

inline SearchResult run_search(const SearchConfig& cfg, const RunOptions& options = {}) {
  SearchState state = init_search(cfg);
  RunOptions full = options;
  full.stop_at_generation.reset();
  return *drive_search(state, full);
}

}  // namespace unas

#endif  // UNAS_SEARCHLOOP_HPP_

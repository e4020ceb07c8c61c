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

// Genetic machinery: fitness-proportional (roulette) selection, the three
// operators, and one generation step with single-individual elitism.
//
// The channel code and the skip code are treated as separate chromosomes:
// crossover cuts each at its own point and mutation edits one gene of each.

#ifndef UNAS_EVOLUTION_HPP_
#define UNAS_EVOLUTION_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "unas/error.hpp"
#include "unas/genome.hpp"
#include "unas/protocol.hpp"
#include "unas/rng.hpp"

namespace unas {

struct Individual {
  Genome genome;
  std::optional<double> fitness;
  std::optional<EvalResponse> eval_record;
  bool penalized = false;

  friend bool operator==(const Individual&, const Individual&) = default;
};

struct Population {
  std::vector<Individual> individuals;
  int generation = 0;

  friend bool operator==(const Population&, const Population&) = default;
};

/// Per-offspring operator probabilities: selection, crossover, mutation.
struct OperatorConfig {
  double select = 0.2;
  double crossover = 0.7;
  double mutate = 0.1;

  friend bool operator==(const OperatorConfig&, const OperatorConfig&) = default;
};

inline void validate_operators(const OperatorConfig& cfg) {
  if (!(cfg.select >= 0 && cfg.crossover >= 0 && cfg.mutate >= 0)) {
    throw Error(ErrorCode::kConfigInvalid, "operator probabilities must be >= 0");
  }
  if (std::abs(cfg.select + cfg.crossover + cfg.mutate - 1.0) > 1e-9) {
    throw Error(ErrorCode::kConfigInvalid, "operator probabilities must sum to 1");
  }
}

/// Pr(j) = f_j / sum_k f_k.
inline std::vector<double> selection_probabilities(std::span<const double> fitnesses) {
  if (fitnesses.empty()) {
    throw Error(ErrorCode::kEmptyPopulation, "no fitness values");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < fitnesses.size(); ++j) {
    if (!std::isfinite(fitnesses[j]) || fitnesses[j] <= 0.0) {
      throw Error(ErrorCode::kNonpositiveFitness,
                  "fitness at index " + std::to_string(j) + " is " +
                      std::to_string(fitnesses[j]));
    }
    total += fitnesses[j];
  }
  std::vector<double> probs;
  probs.reserve(fitnesses.size());
  for (double f : fitnesses) probs.push_back(f / total);
  return probs;
}

/// Cumulative-sum inversion: the first index whose running sum exceeds a
/// uniform draw.
inline std::size_t roulette_pick(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform01();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] > 0.0) last_positive = j;
    cumulative += probs[j];
    if (u < cumulative) return j;
  }
  // Rounding left the total just below u.
  return last_positive;
}

/// Copies a roulette-picked parent; evaluation results are not carried over.
inline Individual op_select(const Population& pop, std::span<const double> probs,
                            Rng& rng) {
  return Individual{pop.individuals[roulette_pick(probs, rng)].genome, {}, {}, false};
}

namespace detail {

inline void one_point_swap(std::vector<int>& a, std::vector<int>& b, Rng& rng) {
  // Needs a cut in 1..n-1; a single gene cannot be split.
  if (a.size() < 2) return;
  const std::size_t cut = 1 + rng.uniform_index(a.size() - 1);
  for (std::size_t i = cut; i < a.size(); ++i) std::swap(a[i], b[i]);
}

}  // namespace detail

/// Single-point crossover on c1 and on c2 with independent cut points; the
/// tails after each cut are exchanged.
inline std::pair<Genome, Genome> op_crossover(const Genome& a, const Genome& b,
                                              Rng& rng) {
  std::pair<Genome, Genome> children{a, b};
  detail::one_point_swap(children.first.channel_code,
                         children.second.channel_code, rng);
  detail::one_point_swap(children.first.skip_code, children.second.skip_code,
                         rng);
  return children;
}

/// Resamples one c1 gene from the other channel choices and flips one c2 bit.
inline Genome op_mutate(const Genome& g, Rng& rng, const SearchSpace& space) {
  Genome out = g;
  const auto& choices = space.channel_choices;
  if (!out.channel_code.empty() && choices.size() > 1) {
    const std::size_t pos = rng.uniform_index(out.channel_code.size());
    // Draw from choices minus the current value by skipping over its slot.
    std::size_t pick = rng.uniform_index(choices.size() - 1);
    const auto current = std::lower_bound(choices.begin(), choices.end(),
                                          out.channel_code[pos]);
    if (pick >= static_cast<std::size_t>(current - choices.begin())) ++pick;
    out.channel_code[pos] = choices[pick];
  }
  if (!out.skip_code.empty()) {
    const std::size_t pos = rng.uniform_index(out.skip_code.size());
    out.skip_code[pos] ^= 1;
  }
  return out;
}

/// Index of the highest fitness; ties go to the lower index.
inline std::size_t best_index(const Population& pop) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < pop.individuals.size(); ++j) {
    if (*pop.individuals[j].fitness > *pop.individuals[best].fitness) best = j;
  }
  return best;
}

/// One generation: slot 0 takes a copy of the best parent, then each
/// remaining slot is filled by selection (s < s1), crossover (s < s1 + s2,
/// second child dropped if only one slot is left) or mutation. Selection
/// probabilities are computed once, from the parents.
inline Population next_generation(const Population& pop, const OperatorConfig& cfg,
                                  const SearchSpace& space, Rng& rng) {
  if (pop.individuals.empty()) {
    throw Error(ErrorCode::kEmptyPopulation, "population is empty");
  }
  std::vector<double> fitnesses;
  fitnesses.reserve(pop.individuals.size());
  for (std::size_t j = 0; j < pop.individuals.size(); ++j) {
    if (!pop.individuals[j].fitness) {
      throw Error(ErrorCode::kUnevaluatedPopulation,
                  "individual " + std::to_string(j) + " has no fitness");
    }
    fitnesses.push_back(*pop.individuals[j].fitness);
  }
  const std::vector<double> probs = selection_probabilities(fitnesses);
  const std::size_t size = pop.individuals.size();

  Population next;
  next.generation = pop.generation + 1;
  next.individuals.reserve(size);
  next.individuals.push_back(
      Individual{pop.individuals[best_index(pop)].genome, {}, {}, false});

  auto parent = [&]() -> const Genome& {
    return pop.individuals[roulette_pick(probs, rng)].genome;
  };
  while (next.individuals.size() < size) {
    const double s = rng.uniform01();
    if (s < cfg.select) {
      next.individuals.push_back(op_select(pop, probs, rng));
    } else if (s < cfg.select + cfg.crossover) {
      const Genome& a = parent();
      const Genome& b = parent();
      auto [first, second] = op_crossover(a, b, rng);
      next.individuals.push_back(Individual{std::move(first), {}, {}, false});
      if (next.individuals.size() < size) {
        next.individuals.push_back(Individual{std::move(second), {}, {}, false});
      }
    } else {
      next.individuals.push_back(
          Individual{op_mutate(parent(), rng, space), {}, {}, false});
    }
  }
  return next;
}

}  // namespace unas

#endif  // UNAS_EVOLUTION_HPP_

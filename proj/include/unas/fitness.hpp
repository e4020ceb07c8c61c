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

// Fitness of an architecture and the evaluators that supply its losses.
//
//   L_gen   = l_gan + lambda * l_l1
//   fitness = 1 / (L_gen + gamma * flops_m)
//
// Evaluations that fail, or whose denominator is not positive, receive the
// penalty fitness kPenaltyFitness and the `penalized` flag instead of
// aborting the search.

#ifndef UNAS_FITNESS_HPP_
#define UNAS_FITNESS_HPP_

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "unas/costmodel.hpp"
#include "unas/error.hpp"
#include "unas/evolution.hpp"
#include "unas/genome.hpp"
#include "unas/protocol.hpp"
#include "unas/rng.hpp"
#include "unas/subprocess.hpp"

namespace unas {

inline constexpr double kPenaltyFitness = 1e-9;
inline constexpr double kDefaultLambda = 100.0;
inline constexpr double kGammaPresets[] = {0.1, 0.01, 0.001};

inline double gen_loss(double l_gan, double l_l1, double lambda) {
  if (!std::isfinite(l_gan) || !std::isfinite(l_l1) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kNonFiniteInput, "gen_loss inputs must be finite");
  }
  return l_gan + lambda * l_l1;
}

inline double fitness_value(double l_gen, double flops_m, double gamma) {
  const double denominator = l_gen + gamma * flops_m;
  if (!(denominator > 0.0) || !std::isfinite(denominator)) {
    throw Error(ErrorCode::kNonpositiveDenominator,
                "l_gen + gamma * flops = " + std::to_string(denominator));
  }
  return 1.0 / denominator;
}

/// Synthetic landscape with a known optimum at `target`.
struct SurrogateConfig {
  Genome target;
  double noise_sigma = 0.0;
  double base = 0.5;
  double skip_weight = 2.0;
  double channel_weight = 1.0;

  friend bool operator==(const SurrogateConfig&, const SurrogateConfig&) = default;
};

/// l_gan = base + skip_weight * hamming(c2) / L_c2
///       + channel_weight * mean_k |log2 c1[k] - log2 target.c1[k]| + noise.
inline EvalResponse surrogate_eval(const Genome& g, const SurrogateConfig& cfg,
                                   Rng& rng) {
  if (g.channel_code.size() != cfg.target.channel_code.size() ||
      g.skip_code.size() != cfg.target.skip_code.size()) {
    throw Error(ErrorCode::kSpaceMismatch,
                "genome and surrogate target have different code lengths");
  }
  double loss = cfg.base;
  if (!g.skip_code.empty()) {
    int hamming = 0;
    for (std::size_t i = 0; i < g.skip_code.size(); ++i) {
      hamming += g.skip_code[i] != cfg.target.skip_code[i];
    }
    loss += cfg.skip_weight * hamming / static_cast<double>(g.skip_code.size());
  }
  double channel_distance = 0.0;
  for (std::size_t i = 0; i < g.channel_code.size(); ++i) {
    channel_distance += std::abs(std::log2(static_cast<double>(g.channel_code[i])) -
                                 std::log2(static_cast<double>(cfg.target.channel_code[i])));
  }
  loss += cfg.channel_weight * channel_distance /
          static_cast<double>(g.channel_code.size());
  if (cfg.noise_sigma > 0.0) loss += rng.normal(0.0, cfg.noise_sigma);
  return EvalResponse{loss, 0.0, EvalStatus::kOk, ""};
}

/// Folds an evaluator response and the analytic cost into the individual.
inline Individual evaluate_individual(Individual ind, const EvalResponse& response,
                                      const CostReport& cost, double gamma,
                                      double lambda) {
  ind.eval_record = response;
  ind.penalized = false;
  if (response.ok()) {
    try {
      ind.fitness = fitness_value(gen_loss(response.l_gan, response.l_l1, lambda),
                                  cost.flops_m, gamma);
      return ind;
    } catch (const Error&) {
      // Degenerate losses fall through to the penalty.
    }
  }
  ind.fitness = kPenaltyFitness;
  ind.penalized = true;
  return ind;
}

/// Batch evaluation contract. Responses are returned in request order.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::vector<EvalResponse> evaluate(std::span<const EvalRequest> requests) = 0;
};

inline Individual evaluate_individual(Individual ind, Evaluator& evaluator,
                                      const EvalRequest& request,
                                      const CostReport& cost, double gamma,
                                      double lambda) {
  const auto responses = evaluator.evaluate(std::span(&request, 1));
  return evaluate_individual(std::move(ind), responses.at(0), cost, gamma, lambda);
}

/// Surrogate landscape behind the evaluator contract. Noise, when enabled,
/// is drawn from a stream seeded by the request seed.
class SurrogateEvaluator final : public Evaluator {
 public:
  SurrogateEvaluator(SurrogateConfig cfg, SearchSpace space)
      : cfg_(std::move(cfg)), space_(std::move(space)) {
    validate_genome(cfg_.target, space_);
  }

  std::vector<EvalResponse> evaluate(std::span<const EvalRequest> requests) override {
    std::vector<EvalResponse> out;
    out.reserve(requests.size());
    for (const EvalRequest& r : requests) {
      Rng rng(r.seed);
      out.push_back(surrogate_eval(parse_genome(r.genome, space_), cfg_, rng));
    }
    return out;
  }

 private:
  SurrogateConfig cfg_;
  SearchSpace space_;
};

namespace detail {

/// One request/response round trip. Sets `reusable` to false when the
/// process must be discarded (protocol state unknown).
inline EvalResponse exchange(ChildProcess& process, const EvalRequest& request,
                             double timeout_s, bool& reusable) {
  using namespace std::chrono;
  const auto deadline =
      ChildProcess::Clock::now() +
      duration_cast<ChildProcess::Clock::duration>(duration<double>(timeout_s));
  reusable = false;
  const std::string timeout_message =
      "timeout: no response within " + std::to_string(timeout_s) + " s";
  auto closed = [&process]() {
    const auto status = process.shutdown(std::chrono::milliseconds(200));
    if (status && WIFEXITED(*status) && WEXITSTATUS(*status) == 127) {
      return EvalResponse::failure(
          "process-spawn-failure: evaluator command could not be run");
    }
    std::string detail = "evaluator closed its output";
    if (status && WIFEXITED(*status)) {
      detail += " (exit status " + std::to_string(WEXITSTATUS(*status)) + ")";
    }
    return EvalResponse::failure("malformed-response: " + detail);
  };

  switch (process.write_line(request_to_json(request).dump(), deadline)) {
    case ChildProcess::IoStatus::kOk: break;
    case ChildProcess::IoStatus::kTimeout:
      process.kill();
      return EvalResponse::failure(timeout_message);
    case ChildProcess::IoStatus::kClosed: return closed();
  }
  std::string line;
  switch (process.read_line(line, deadline)) {
    case ChildProcess::IoStatus::kOk: break;
    case ChildProcess::IoStatus::kTimeout:
      process.kill();
      return EvalResponse::failure(timeout_message);
    case ChildProcess::IoStatus::kClosed: return closed();
  }
  EvalResponse response = parse_response_line(line);
  reusable = response.ok() || response.message.starts_with("evaluator-failed");
  return response;
}

}  // namespace detail

/// Starts `command`, sends one request, reads one response, and stops the
/// process. Never throws; every failure is a failed response whose message
/// starts with its kind.
inline EvalResponse external_eval(const EvalRequest& request,
                                  const std::string& command, double timeout_s) {
  std::unique_ptr<ChildProcess> process;
  try {
    process = std::make_unique<ChildProcess>(command);
  } catch (const std::exception& e) {
    return EvalResponse::failure(std::string("process-spawn-failure: ") + e.what());
  }
  bool reusable = false;
  return detail::exchange(*process, request, timeout_s, reusable);
}

/// Pool of long-running evaluator processes speaking the line protocol.
/// Request i of a batch goes to worker i % parallelism; each worker handles
/// its share sequentially and results are joined by index. A worker whose
/// exchange breaks the protocol is discarded and restarted on next use.
class ExternalEvaluator final : public Evaluator {
 public:
  ExternalEvaluator(std::string command, double timeout_s, int parallelism)
      : command_(std::move(command)),
        timeout_s_(timeout_s),
        workers_(parallelism < 1 ? 1 : parallelism) {}

  std::vector<EvalResponse> evaluate(std::span<const EvalRequest> requests) override {
    std::vector<EvalResponse> out(requests.size());
    const std::size_t lanes = std::min(workers_.size(), requests.size());
    auto run_lane = [&](std::size_t lane) {
      for (std::size_t i = lane; i < requests.size(); i += lanes) {
        out[i] = evaluate_on(workers_[lane], requests[i]);
      }
    };
    if (lanes <= 1) {
      if (lanes == 1) run_lane(0);
      return out;
    }
    std::vector<std::jthread> threads;
    threads.reserve(lanes);
    for (std::size_t lane = 0; lane < lanes; ++lane) {
      threads.emplace_back(run_lane, lane);
    }
    threads.clear();  // joins
    return out;
  }

 private:
  EvalResponse evaluate_on(std::unique_ptr<ChildProcess>& worker,
                           const EvalRequest& request) {
    if (!worker) {
      try {
        worker = std::make_unique<ChildProcess>(command_);
      } catch (const std::exception& e) {
        return EvalResponse::failure(std::string("process-spawn-failure: ") +
                                     e.what());
      }
    }
    bool reusable = false;
    EvalResponse response = detail::exchange(*worker, request, timeout_s_, reusable);
    if (!reusable) worker.reset();
    return response;
  }

  std::string command_;
  double timeout_s_;
  std::vector<std::unique_ptr<ChildProcess>> workers_;
};

}  // namespace unas

#endif  // UNAS_FITNESS_HPP_

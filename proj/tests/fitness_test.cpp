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

#include "unas/fitness.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace unas {
namespace {

std::string fixture(const std::string& name) {
  return "sh " + std::string(UNAS_TEST_DATA_DIR) + "/fixtures/" + name;
}

EvalRequest baseline_request() {
  const Genome g = baseline_genome(default_space());
  EvalRequest r;
  r.genome = format_genome(g);
  r.architecture = export_architecture(decode(g, 3, 256));
  r.seed = 17;
  return r;
}

TEST(GenLossTest, Values) {
  EXPECT_DOUBLE_EQ(gen_loss(0.5, 0.01, 100), 1.5);
  EXPECT_DOUBLE_EQ(gen_loss(0.3, 0.0, 100), 0.3);
  EXPECT_EQ(kDefaultLambda, 100.0);
  EXPECT_THROW(gen_loss(std::nan(""), 0, 100), Error);
  EXPECT_THROW(gen_loss(0.5, std::numeric_limits<double>::infinity(), 100), Error);
}

TEST(FitnessValueTest, Values) {
  EXPECT_DOUBLE_EQ(fitness_value(1.0, 100, 0.01), 0.5);
  EXPECT_DOUBLE_EQ(fitness_value(2.0, 123456, 0), 0.5);
  EXPECT_EQ(kGammaPresets[0], 0.1);
  EXPECT_EQ(kGammaPresets[1], 0.01);
  EXPECT_EQ(kGammaPresets[2], 0.001);
  try {
    fitness_value(-1.0, 10, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonpositiveDenominator);
  }
}

TEST(FitnessValueTest, StrictlyDecreasing) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double loss = 0.01 + rng.uniform01() * 5;
    const double flops = 1 + rng.uniform01() * 50000;
    const double gamma = 1e-4 + rng.uniform01() * 0.1;
    EXPECT_GT(fitness_value(loss, flops, gamma), 0.0);
    EXPECT_GT(fitness_value(loss, flops, gamma), fitness_value(loss + 0.01, flops, gamma));
    EXPECT_GT(fitness_value(loss, flops, gamma), fitness_value(loss, flops + 1, gamma));
  }
}

TEST(SurrogateTest, KnownValues) {
  const Genome target = baseline_genome(default_space());
  const SurrogateConfig cfg{target};
  Rng rng(0);
  EXPECT_DOUBLE_EQ(surrogate_eval(target, cfg, rng).l_gan, 0.5);
  EXPECT_EQ(surrogate_eval(target, cfg, rng).l_l1, 0.0);
  EXPECT_TRUE(surrogate_eval(target, cfg, rng).ok());

  Genome one_skip = target;
  one_skip.skip_code[3] = 0;
  EXPECT_NEAR(surrogate_eval(one_skip, cfg, rng).l_gan, 0.5 + 2.0 / 7, 1e-12);
  EXPECT_NEAR(surrogate_eval(one_skip, cfg, rng).l_gan, 0.7857, 1e-4);

  Genome wider = target;
  wider.channel_code[0] = 128;
  EXPECT_DOUBLE_EQ(surrogate_eval(wider, cfg, rng).l_gan, 0.625);
}

TEST(SurrogateTest, SpaceMismatch) {
  const SurrogateConfig cfg{baseline_genome(default_space())};
  Rng rng(0);
  try {
    surrogate_eval(Genome{{64, 128}, {1}}, cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpaceMismatch);
  }
}

TEST(SurrogateTest, UniqueOptimumByEnumeration) {
  const std::vector<SearchSpace> spaces = {
      {{64, 128}, 2, 1}, {{64, 128, 256, 512}, 3, 2}, {{8, 16, 32}, 4, 3}};
  Rng pick(5);
  for (const SearchSpace& space : spaces) {
    const auto all = oracle::enumerate_genomes(space);
    ASSERT_LE(all.size(), 4096u);
    for (int trial = 0; trial < 3; ++trial) {
      const SurrogateConfig cfg{random_genome(space, pick)};
      Rng rng(0);
      double best = std::numeric_limits<double>::infinity();
      int argmin_count = 0;
      Genome argmin;
      for (const Genome& g : all) {
        const double l = surrogate_eval(g, cfg, rng).l_gan;
        if (l < best) {
          best = l;
          argmin = g;
          argmin_count = 1;
        } else if (l == best) {
          ++argmin_count;
        }
      }
      EXPECT_EQ(argmin, cfg.target);
      EXPECT_EQ(argmin_count, 1);
    }
  }
}

TEST(SurrogateTest, NoiseIsSeeded) {
  SurrogateConfig cfg{baseline_genome(default_space())};
  cfg.noise_sigma = 0.1;
  Rng a(3), b(3);
  const Genome g = cfg.target;
  EXPECT_EQ(surrogate_eval(g, cfg, a), surrogate_eval(g, cfg, b));
  Rng c(4);
  EXPECT_NE(surrogate_eval(g, cfg, a).l_gan, surrogate_eval(g, cfg, c).l_gan);
}

TEST(EvaluateIndividualTest, OkResponse) {
  CostReport cost;
  cost.flops_m = 100;
  const Individual ind = evaluate_individual(
      Individual{baseline_genome(default_space())},
      EvalResponse{0.5, 0.01, EvalStatus::kOk, ""}, cost, 0.01, 100);
  EXPECT_DOUBLE_EQ(*ind.fitness, 0.4);
  EXPECT_FALSE(ind.penalized);
  ASSERT_TRUE(ind.eval_record.has_value());
}

TEST(EvaluateIndividualTest, FailedResponseIsPenalized) {
  CostReport cost;
  cost.flops_m = 100;
  const Individual ind = evaluate_individual(
      Individual{baseline_genome(default_space())}, EvalResponse::failure("timeout"),
      cost, 0.01, 100);
  EXPECT_EQ(*ind.fitness, 1e-9);
  EXPECT_EQ(*ind.fitness, kPenaltyFitness);
  EXPECT_TRUE(ind.penalized);
}

TEST(EvaluateIndividualTest, NonpositiveDenominatorIsPenalized) {
  CostReport cost;
  cost.flops_m = 10;
  const Individual ind = evaluate_individual(
      Individual{}, EvalResponse{-5.0, 0.0, EvalStatus::kOk, ""}, cost, 0.01, 100);
  EXPECT_EQ(*ind.fitness, kPenaltyFitness);
  EXPECT_TRUE(ind.penalized);
}

TEST(EvaluateIndividualTest, CheaperWinsAtEqualLoss) {
  CostReport cheap, costly;
  cheap.flops_m = 5000;
  costly.flops_m = 18000;
  const EvalResponse r{0.8, 0.01, EvalStatus::kOk, ""};
  for (double gamma : kGammaPresets) {
    EXPECT_GT(*evaluate_individual(Individual{}, r, cheap, gamma, 100).fitness,
              *evaluate_individual(Individual{}, r, costly, gamma, 100).fitness);
  }
}

TEST(EvaluateIndividualTest, ArgmaxInvariantUnderScaling) {
  Rng rng(9);
  std::vector<double> f(20);
  for (double& x : f) x = rng.uniform01() + 1e-3;
  const auto best = std::max_element(f.begin(), f.end()) - f.begin();
  for (double& x : f) x *= 37.5;
  EXPECT_EQ(std::max_element(f.begin(), f.end()) - f.begin(), best);
}

TEST(ProtocolTest, ParseResponseLine) {
  EXPECT_EQ(parse_response_line(R"({"l_gan":0.7,"l_l1":0.002,"status":"ok","message":""})"),
            (EvalResponse{0.7, 0.002, EvalStatus::kOk, ""}));
  EXPECT_TRUE(parse_response_line(R"({"l_gan":NaN,"l_l1":0,"status":"ok"})")
                  .message.starts_with("non-finite-loss"));
  EXPECT_TRUE(parse_response_line(R"({"l_gan":-Infinity,"l_l1":0,"status":"ok"})")
                  .message.starts_with("non-finite-loss"));
  EXPECT_TRUE(parse_response_line(R"({"l_gan":"NaN","l_l1":0,"status":"ok"})")
                  .message.starts_with("non-finite-loss"));
  EXPECT_TRUE(parse_response_line("garbage").message.starts_with("malformed-response"));
  EXPECT_TRUE(parse_response_line(R"({"l_gan":1,"l_l1":-1,"status":"ok"})")
                  .message.starts_with("malformed-response"));
  EXPECT_TRUE(parse_response_line(R"({"l_gan":1,"status":"ok"})")
                  .message.starts_with("malformed-response"));
  EXPECT_TRUE(parse_response_line(R"({"l_gan":1,"l_l1":0,"status":"maybe"})")
                  .message.starts_with("malformed-response"));
  // "NaN" inside a string literal is left alone.
  const EvalResponse r =
      parse_response_line(R"({"l_gan":1,"l_l1":0,"status":"ok","message":"NaN seen"})");
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.message, "NaN seen");
}

TEST(ProtocolTest, RequestRoundTrip) {
  EvalRequest r = baseline_request();
  r.train_budget = {3, 8};
  r.dataset = {"/data/train", "/data/val"};
  r.lambda = 50;
  r.seed = 0xfedcba9876543210ULL;
  const Json j = Json::parse(request_to_json(r).dump());
  const EvalRequest back = request_from_json(j);
  EXPECT_EQ(back.genome, r.genome);
  EXPECT_EQ(back.architecture, r.architecture);
  EXPECT_EQ(back.lambda, r.lambda);
  EXPECT_EQ(back.train_budget, r.train_budget);
  EXPECT_EQ(back.dataset, r.dataset);
  EXPECT_EQ(back.seed, r.seed);
  for (const char* key : {"architecture", "genome", "lambda", "train_budget", "dataset", "seed"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(ExternalEvalTest, EchoEvaluator) {
  const EvalResponse r = external_eval(baseline_request(), fixture("echo_evaluator.sh"), 10);
  EXPECT_EQ(r, (EvalResponse{0.7, 0.002, EvalStatus::kOk, ""}));
}

TEST(ExternalEvalTest, NonFiniteLoss) {
  const EvalResponse r = external_eval(baseline_request(), fixture("nan_evaluator.sh"), 10);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.message.starts_with("non-finite-loss")) << r.message;
}

TEST(ExternalEvalTest, MalformedResponse) {
  const EvalResponse r =
      external_eval(baseline_request(), fixture("malformed_evaluator.sh"), 10);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.message.starts_with("malformed-response")) << r.message;
}

TEST(ExternalEvalTest, Timeout) {
  const auto start = std::chrono::steady_clock::now();
  const EvalResponse r = external_eval(baseline_request(), fixture("slow_evaluator.sh"), 0.5);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.message.starts_with("timeout")) << r.message;
  EXPECT_LT(elapsed, 5.0);
}

TEST(ExternalEvalTest, SpawnFailure) {
  const EvalResponse r =
      external_eval(baseline_request(), "/nonexistent/evaluator-binary", 10);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.message.starts_with("process-spawn-failure")) << r.message;
}

TEST(ExternalEvalTest, EvaluatorExitsEarly) {
  const EvalResponse r = external_eval(baseline_request(), fixture("crash_evaluator.sh"), 10);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.message.starts_with("malformed-response")) << r.message;
}

TEST(ExternalEvalTest, EvaluatorReportedFailure) {
  const EvalResponse r = external_eval(baseline_request(), fixture("failing_evaluator.sh"), 10);
  EXPECT_FALSE(r.ok());
  EXPECT_NE(r.message.find("out of memory"), std::string::npos);
}

TEST(ExternalEvaluatorTest, PoolReturnsResultsInOrder) {
  const std::string target = "64,128,256,512,512,512,512,512|1,1,1,1,1,1,1";
  ExternalEvaluator pool("python3 " + std::string(UNAS_TEST_DATA_DIR) +
                             "/fixtures/surrogate_evaluator.py '" + target + "'",
                         30, 3);
  SurrogateEvaluator local(SurrogateConfig{baseline_genome(default_space())},
                           default_space());
  Rng rng(77);
  std::vector<EvalRequest> requests;
  for (int i = 0; i < 10; ++i) {
    const Genome g = random_genome(default_space(), rng);
    EvalRequest r;
    r.genome = format_genome(g);
    r.architecture = export_architecture(decode(g, 3, 256));
    requests.push_back(r);
  }
  // Two batches: the second reuses the live worker processes.
  for (int batch = 0; batch < 2; ++batch) {
    EXPECT_EQ(pool.evaluate(requests), local.evaluate(requests));
  }
}

TEST(ExternalEvaluatorTest, RestartsAfterTimeout) {
  ExternalEvaluator pool(fixture("slow_evaluator.sh"), 0.3, 2);
  std::vector<EvalRequest> requests(3, baseline_request());
  for (const EvalResponse& r : pool.evaluate(requests)) {
    EXPECT_TRUE(r.message.starts_with("timeout"));
  }
}

}  // namespace
}  // namespace unas

#include <gtest/gtest.h>

#include <cmath>

#include "hypadv/error.hpp"
#include "hypadv/evolver.hpp"
#include "hypadv/prompts.hpp"
#include "test_util.hpp"

using namespace hypadv;
using namespace hypadv::evolver;

namespace {

GoldExample gold_example(int i) {
  const std::string c = "We introduce gadget " + std::to_string(i) + " for fast hashing.";
  return {"# P\n\n# Introduction\n\nMARK" + std::to_string(i) + " Some context. " + c + " Trailing text.\n", c, 1};
}

// Answers label 1 with the gold text when `ok(i)` holds for example i.
std::function<std::string(std::uint64_t, const gateway::ChatRequest&)> oracle_extractor(std::function<bool(int)> ok) {
  return [ok](std::uint64_t, const gateway::ChatRequest& r) {
    for (int i = 0; i < 100; ++i) {
      if (r.user_prompt.find("MARK" + std::to_string(i) + " ") == std::string::npos) continue;
      if (ok(i)) return json{{"contribution_label", 1}, {"contribution_text", gold_example(i).gold_contribution}}.dump();
      return json{{"contribution_label", 0}, {"contribution_text", "Inferred."}}.dump();
    }
    return std::string("{}");
  };
}

std::vector<PromptGenome> population(std::vector<double> fitness) {
  std::vector<PromptGenome> pop;
  for (std::size_t i = 0; i < fitness.size(); ++i) pop.push_back({"g" + std::to_string(i), "p", fitness[i], 0, {}});
  return pop;
}

}  // namespace

TEST(Fitness, FractionCorrect) {
  std::vector<GoldExample> gold;
  for (int i = 0; i < 100; ++i) gold.push_back(gold_example(i));
  gateway::MockBackend mock;
  mock.set_fallback(oracle_extractor([](int i) { return i < 94; }));
  PromptGenome g{"g0", "prompt", std::nullopt, 0, {}};
  FitnessConfig cfg;
  cfg.workers = 4;
  EXPECT_DOUBLE_EQ(evaluate_fitness(g, gold, mock, cfg), 0.94);
  EXPECT_DOUBLE_EQ(*g.fitness, 0.94);
}

TEST(Fitness, SingletonAndTotalFailure) {
  std::vector<GoldExample> one{gold_example(0)};
  gateway::MockBackend good;
  good.set_fallback(oracle_extractor([](int) { return true; }));
  PromptGenome a{"a", "p", std::nullopt, 0, {}};
  EXPECT_DOUBLE_EQ(evaluate_fitness(a, one, good, {}), 1.0);

  std::vector<GoldExample> gold{gold_example(0), gold_example(1), gold_example(2)};
  gateway::MockBackend empty;
  empty.set_fallback([](std::uint64_t, const gateway::ChatRequest&) { return std::string(""); });
  PromptGenome b{"b", "p", std::nullopt, 0, {}};
  FitnessConfig cfg;
  cfg.call.repair_retries = 0;
  EXPECT_DOUBLE_EQ(evaluate_fitness(b, gold, empty, cfg), 0.0);
}

TEST(Fitness, LabelZeroGoldNeedsLabelZero) {
  auto g = gold_example(3);
  g.gold_label = 0;
  std::vector<GoldExample> gold{g};
  gateway::MockBackend says_zero;
  says_zero.set_fallback(oracle_extractor([](int) { return false; }));
  PromptGenome a{"a", "p", std::nullopt, 0, {}};
  EXPECT_DOUBLE_EQ(evaluate_fitness(a, gold, says_zero, {}), 1.0);
}

TEST(Fitness, CacheAndImmutability) {
  std::vector<GoldExample> gold{gold_example(0), gold_example(1)};
  gateway::MockBackend mock;
  int calls = 0;
  mock.set_fallback([&](std::uint64_t s, const gateway::ChatRequest& r) {
    ++calls;
    return oracle_extractor([](int i) { return i == 0; })(s, r);
  });
  FitnessCache cache;
  PromptGenome a{"a", "same prompt", std::nullopt, 0, {}};
  PromptGenome b{"b", "same prompt", std::nullopt, 0, {}};
  EXPECT_DOUBLE_EQ(evaluate_fitness(a, gold, mock, {}, &cache), 0.5);
  const int after_first = calls;
  EXPECT_DOUBLE_EQ(evaluate_fitness(b, gold, mock, {}, &cache), 0.5);
  EXPECT_EQ(calls, after_first);
  EXPECT_EQ(cache.size(), 1u);
  // Already evaluated genomes keep their value.
  PromptGenome c{"c", "other", 0.25, 0, {}};
  EXPECT_DOUBLE_EQ(evaluate_fitness(c, gold, mock, {}, &cache), 0.25);
}

TEST(Fitness, GatewayFailuresAbort) {
  class Broken : public gateway::MockBackend {
   public:
    gateway::ChatResponse chat_complete(const gateway::ChatRequest&) override {
      throw TransportError("retries exhausted", 503, "");
    }
  };
  Broken broken;
  std::vector<GoldExample> gold{gold_example(0), gold_example(1)};
  PromptGenome g{"g", "p", std::nullopt, 0, {}};
  EXPECT_THROW(evaluate_fitness(g, gold, broken, {}), Error);
  EXPECT_FALSE(g.fitness);
}

TEST(Boltzmann, TwoGenomeProbability) {
  const auto pop = population({0.9, 0.5});
  Rng rng(8);
  int first = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) first += boltzmann_select(pop, 1, 1.0, rng)[0] == 0;
  EXPECT_NEAR(first / double(n), std::exp(0.9) / (std::exp(0.9) + std::exp(0.5)), 0.01);
}

TEST(Boltzmann, EqualFitnessIsUniform) {
  const auto pop = population({0.3, 0.3, 0.3, 0.3});
  Rng rng(2);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) ++counts[boltzmann_select(pop, 1, 1.0, rng)[0]];
  for (int c : counts) EXPECT_NEAR(c / 40000.0, 0.25, 0.01);
}

TEST(Boltzmann, ExhaustionAndErrors) {
  const auto pop = population({0.1, 0.9, 0.4});
  Rng rng(1);
  auto all = boltzmann_select(pop, 3, 1.0, rng);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_THROW(boltzmann_select(pop, 4, 1.0, rng), Error);
  auto unevaluated = pop;
  unevaluated[1].fitness.reset();
  EXPECT_THROW(boltzmann_select(unevaluated, 1, 1.0, rng), Error);
}

TEST(Evolve, ZeroIterationsReturnsSeed) {
  std::vector<GoldExample> gold{gold_example(0)};
  gateway::MockBackend ex;
  ex.set_fallback(oracle_extractor([](int) { return true; }));
  gateway::MockBackend cross;
  EvolveConfig cfg;
  cfg.iterations = 0;
  const auto r = evolve("seed prompt", gold, ex, cross, cfg);
  EXPECT_EQ(r.best.id, "g0");
  EXPECT_EQ(r.best.prompt_text, "seed prompt");
  EXPECT_DOUBLE_EQ(*r.best.fitness, 1.0);
  EXPECT_EQ(r.lineage.size(), 1u);
  EXPECT_EQ(r.best_so_far, std::vector<double>{1.0});
}

TEST(Evolve, LineageAndMonotoneBest) {
  std::vector<GoldExample> gold;
  for (int i = 0; i < 4; ++i) gold.push_back(gold_example(i));
  gateway::MockBackend ex;
  // Fitness depends on prompt length, so children vary.
  ex.set_fallback([](std::uint64_t s, const gateway::ChatRequest& r) {
    const auto lines = static_cast<int>(std::count(r.system_prompt.begin(), r.system_prompt.end(), '\n'));
    return oracle_extractor([lines](int i) { return i < lines % 5; })(s, r);
  });
  gateway::MockBackend cross({.seed = 3});
  cross.set_fallback([](std::uint64_t seed, const gateway::ChatRequest&) {
    std::string p = "child";
    for (std::uint64_t i = 0; i < seed % 6; ++i) p += "\nline";
    return p;
  });
  EvolveConfig cfg;
  cfg.iterations = 8;
  cfg.top_k = 3;
  cfg.seed = 12;
  const auto r = evolve("seed", gold, ex, cross, cfg);
  ASSERT_EQ(r.best_so_far.size(), 9u);
  for (std::size_t i = 1; i < r.best_so_far.size(); ++i) EXPECT_GE(r.best_so_far[i], r.best_so_far[i - 1]);
  EXPECT_EQ(r.lineage.size(), 9u);
  EXPECT_EQ(r.lineage[3].id, "g3");
  EXPECT_FALSE(r.lineage[3].parent_ids.empty());
  EXPECT_GE(r.lineage[3].generation_index, 1u);
  EXPECT_DOUBLE_EQ(*r.best.fitness, r.best_so_far.back());
  const auto again = evolve("seed", gold, ex, cross, cfg);
  EXPECT_EQ(again.best.id, r.best.id);

  testing_util::TempDir dir("lineage");
  write_lineage(dir.file("lineage.jsonl"), r.lineage);
  const auto rows = read_jsonl(dir.file("lineage.jsonl"));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0]["id"], "g0");
}

TEST(Evolve, EmptyCrossoverSkipsIteration) {
  std::vector<GoldExample> gold{gold_example(0)};
  gateway::MockBackend ex;
  ex.set_fallback(oracle_extractor([](int) { return false; }));
  gateway::MockBackend cross;
  cross.set_fallback([](std::uint64_t, const gateway::ChatRequest&) { return std::string("  "); });
  EvolveConfig cfg;
  cfg.iterations = 3;
  const auto r = evolve("seed", gold, ex, cross, cfg);
  EXPECT_EQ(r.skipped_iterations, 3u);
  EXPECT_EQ(r.lineage.size(), 1u);
}

TEST(CrossoverInput, TagsParents) {
  PromptGenome a{"g1", "alpha\nbeta", 0.5, 0, {}};
  PromptGenome b{"g2", "gamma", 0.25, 0, {}};
  const PromptGenome* parents[] = {&a, &b};
  const auto s = crossover_input(parents);
  EXPECT_NE(s.find("<prompt id=g1 accuracy=0.500>\nalpha\nbeta\n</prompt>"), std::string::npos);
  EXPECT_NE(s.find("<prompt id=g2"), std::string::npos);
}

TEST(Gold, LoadsRelativeFulltext) {
  const auto gold = load_gold(std::string(HYPADV_TEST_DATA) + "/gold.jsonl");
  ASSERT_EQ(gold.size(), 3u);
  EXPECT_NE(gold[0].fulltext.find("# 1 Introduction"), std::string::npos);
  EXPECT_EQ(gold[0].gold_label, 1);
  EXPECT_EQ(gold_set_hash(gold), gold_set_hash(load_gold(std::string(HYPADV_TEST_DATA) + "/gold.jsonl")));
}

TEST(Gold, ShippedPromptsScoreOnFixture) {
  const auto gold = load_gold(std::string(HYPADV_TEST_DATA) + "/gold.jsonl");
  gateway::MockBackend mock({.seed = 0});
  PromptGenome g{"g0", std::string(prompts::asset("extraction_default.txt")), std::nullopt, 0, {}};
  EXPECT_DOUBLE_EQ(evaluate_fitness(g, gold, mock, {}), 1.0);
}

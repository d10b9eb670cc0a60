#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypadv/gateway.hpp"
#include "hypadv/json_io.hpp"
#include "hypadv/random.hpp"
#include "hypadv/string_metrics.hpp"
#include "hypadv/summarizer.hpp"

namespace hypadv::evolver {

struct PromptGenome {
  std::string id;
  std::string prompt_text;
  std::optional<double> fitness;  // set once, never changed
  std::size_t generation_index = 0;
  std::vector<std::string> parent_ids;
};

ordered_json genome_to_json(const PromptGenome& g);

struct GoldExample {
  std::string fulltext;
  std::string gold_contribution;
  int gold_label = 0;
};

// JSON lines {fulltext | fulltext_path, gold_contribution, gold_label}.
// Relative fulltext paths resolve against the gold file's directory.
std::vector<GoldExample> load_gold(const std::string& path);
std::string gold_set_hash(std::span<const GoldExample> gold);

// Fitness keyed by (prompt hash, gold-set hash). Thread-safe.
class FitnessCache {
 public:
  std::optional<double> get(const std::string& prompt, const std::string& gold_hash) const;
  void put(const std::string& prompt, const std::string& gold_hash, double fitness);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, double> values_;
};

struct FitnessConfig {
  MatchThresholds thresholds;
  LcsUnit unit = LcsUnit::kCharacters;
  summarizer::LlmCallConfig call;
  double max_gateway_failure_rate = 0.2;
  std::size_t workers = 1;
};

// Fraction of gold examples whose extraction has the right label and, for
// label 1, matches the gold text. Returns the existing value if the genome
// is already evaluated. Throws Error(kTransport) and leaves the genome
// unevaluated when gateway failures exceed the configured rate.
double evaluate_fitness(PromptGenome& genome, std::span<const GoldExample> gold, gateway::LlmBackend& backend,
                        const FitnessConfig& config, FitnessCache* cache = nullptr);

// Draws k distinct genomes with probability proportional to
// exp(fitness / temperature), renormalizing after each draw. Every genome must
// be evaluated. Throws Error(kSelection) if k exceeds the population.
std::vector<std::size_t> boltzmann_select(std::span<const PromptGenome> population, std::size_t k, double temperature,
                                          Rng& rng);

struct EvolveConfig {
  std::size_t top_k = 5;
  std::size_t iterations = 28;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::string crossover_model;
  gateway::DecodingParams crossover_decoding{0.7, 0.95, 1.0, 2048};
  FitnessConfig fitness;
};

struct EvolveResult {
  PromptGenome best;
  std::vector<PromptGenome> lineage;  // every genome created, in creation order
  std::vector<double> best_so_far;    // after seeding, then after each iteration
  std::size_t skipped_iterations = 0;
};

// Crossover user prompt: each parent wrapped in <prompt id=... accuracy=...> tags.
std::string crossover_input(std::span<const PromptGenome* const> parents);

EvolveResult evolve(const std::string& seed_prompt, std::span<const GoldExample> gold,
                    gateway::LlmBackend& extraction_backend, gateway::LlmBackend& crossover_backend,
                    const EvolveConfig& config, FitnessCache* cache = nullptr);

void write_lineage(const std::string& path, std::span<const PromptGenome> lineage);

}  // namespace hypadv::evolver

#include "hypadv/evolver.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "hypadv/error.hpp"
#include "hypadv/parallel.hpp"
#include "hypadv/prompts.hpp"
#include "hypadv/text.hpp"

namespace hypadv::evolver {

ordered_json genome_to_json(const PromptGenome& g) {
  ordered_json j;
  j["id"] = g.id;
  j["prompt_text"] = g.prompt_text;
  j["fitness"] = g.fitness ? ordered_json(*g.fitness) : ordered_json(nullptr);
  j["generation_index"] = g.generation_index;
  j["parent_ids"] = g.parent_ids;
  return j;
}

std::vector<GoldExample> load_gold(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<GoldExample> out;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    const json j = json::parse(line, nullptr, false);
    const std::string where = path + ":" + std::to_string(line_no);
    if (!j.is_object()) throw Error(ErrorKind::kIntegrity, where + ": malformed JSON");
    GoldExample g;
    if (j.contains("fulltext")) {
      g.fulltext = j.at("fulltext").get<std::string>();
    } else if (j.contains("fulltext_path")) {
      auto p = std::filesystem::path(j.at("fulltext_path").get<std::string>());
      if (p.is_relative()) p = base / p;
      g.fulltext = read_text_file(p.string());
    } else {
      throw Error(ErrorKind::kIntegrity, where + ": needs fulltext or fulltext_path");
    }
    g.gold_label = j.value("gold_label", -1);
    if (g.gold_label != 0 && g.gold_label != 1) throw Error(ErrorKind::kIntegrity, where + ": gold_label must be 0 or 1");
    g.gold_contribution = j.value("gold_contribution", std::string());
    if (g.gold_label == 1 && g.gold_contribution.empty()) {
      throw Error(ErrorKind::kIntegrity, where + ": label-1 example needs gold_contribution");
    }
    out.push_back(std::move(g));
  });
  if (out.empty()) throw Error(ErrorKind::kUsage, path + ": no gold examples");
  return out;
}

std::string gold_set_hash(std::span<const GoldExample> gold) {
  json arr = json::array();
  for (const auto& g : gold) arr.push_back({g.fulltext, g.gold_contribution, g.gold_label});
  return text::sha256_hex(arr.dump());
}

std::optional<double> FitnessCache::get(const std::string& prompt, const std::string& gold_hash) const {
  std::lock_guard lock(mutex_);
  auto it = values_.find(text::sha256_hex(prompt) + ":" + gold_hash);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void FitnessCache::put(const std::string& prompt, const std::string& gold_hash, double fitness) {
  std::lock_guard lock(mutex_);
  values_[text::sha256_hex(prompt) + ":" + gold_hash] = fitness;
}

std::size_t FitnessCache::size() const {
  std::lock_guard lock(mutex_);
  return values_.size();
}

double evaluate_fitness(PromptGenome& genome, std::span<const GoldExample> gold, gateway::LlmBackend& backend,
                        const FitnessConfig& config, FitnessCache* cache) {
  if (genome.fitness) return *genome.fitness;
  if (gold.empty()) throw Error(ErrorKind::kUsage, "fitness: empty gold set");
  const std::string gold_hash = gold_set_hash(gold);
  if (cache) {
    if (auto hit = cache->get(genome.prompt_text, gold_hash)) {
      genome.fitness = *hit;
      return *hit;
    }
  }
  std::vector<char> correct(gold.size(), 0);
  std::atomic<std::size_t> gateway_failures{0};
  parallel_for(gold.size(), config.workers, [&](std::size_t i) {
    const auto& g = gold[i];
    try {
      auto call = config.call;
      call.seed = text::mix64(config.call.seed, i);
      const auto ex = summarizer::extract_contribution(g.fulltext, genome.prompt_text, backend, call);
      bool ok = ex.contribution_label == g.gold_label;
      if (ok && g.gold_label == 1) {
        ok = match_score(ex.contribution_text, g.gold_contribution, config.thresholds, config.unit).match;
      }
      correct[i] = ok ? 1 : 0;
    } catch (const TransportError& e) {
      ++gateway_failures;
      spdlog::warn("fitness {}: gateway failure on example {}: {}", genome.id, i, e.what());
    } catch (const Error& e) {
      spdlog::debug("fitness {}: example {} counted wrong: {}", genome.id, i, e.what());
    }
  });
  const double failure_rate = static_cast<double>(gateway_failures.load()) / static_cast<double>(gold.size());
  if (failure_rate > config.max_gateway_failure_rate) {
    throw Error(ErrorKind::kTransport, "fitness aborted for " + genome.id + ": " +
                                           std::to_string(gateway_failures.load()) + " of " +
                                           std::to_string(gold.size()) + " examples hit gateway failures");
  }
  const double f = static_cast<double>(std::count(correct.begin(), correct.end(), 1)) /
                   static_cast<double>(gold.size());
  genome.fitness = f;
  if (cache) cache->put(genome.prompt_text, gold_hash, f);
  return f;
}

std::vector<std::size_t> boltzmann_select(std::span<const PromptGenome> population, std::size_t k, double temperature,
                                          Rng& rng) {
  if (!(temperature > 0.0)) throw Error(ErrorKind::kUsage, "temperature must be > 0");
  if (k > population.size()) {
    throw Error(ErrorKind::kSelection, "cannot select " + std::to_string(k) + " from a population of " +
                                           std::to_string(population.size()));
  }
  double fmax = -std::numeric_limits<double>::infinity();
  for (const auto& g : population) {
    if (!g.fitness) throw Error(ErrorKind::kSelection, "unevaluated genome in selection pool: " + g.id);
    fmax = std::max(fmax, *g.fitness);
  }
  std::vector<double> weight(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) weight[i] = std::exp((*population[i].fitness - fmax) / temperature);
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  for (std::size_t draw = 0; draw < k; ++draw) {
    double total = 0.0;
    for (double w : weight) total += w;
    double u = rng.uniform() * total;
    std::size_t pick = population.size();
    for (std::size_t i = 0; i < weight.size(); ++i) {
      if (weight[i] <= 0.0) continue;
      pick = i;
      if (u < weight[i]) break;
      u -= weight[i];
    }
    chosen.push_back(pick);
    weight[pick] = 0.0;
  }
  return chosen;
}

std::string crossover_input(std::span<const PromptGenome* const> parents) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (i > 0) out << "\n\n";
    out << "<prompt id=" << parents[i]->id << " accuracy=" << parents[i]->fitness.value_or(0.0) << ">\n"
        << parents[i]->prompt_text << "\n</prompt>";
  }
  return out.str();
}

EvolveResult evolve(const std::string& seed_prompt, std::span<const GoldExample> gold,
                    gateway::LlmBackend& extraction_backend, gateway::LlmBackend& crossover_backend,
                    const EvolveConfig& config, FitnessCache* cache) {
  if (config.top_k == 0) throw Error(ErrorKind::kUsage, "top_k must be >= 1");
  if (text::trim(seed_prompt).empty()) throw Error(ErrorKind::kUsage, "empty seed prompt");
  EvolveResult result;
  std::vector<PromptGenome> population;
  PromptGenome seed{"g0", seed_prompt, std::nullopt, 0, {}};
  evaluate_fitness(seed, gold, extraction_backend, config.fitness, cache);
  spdlog::info("evolve: seed fitness {:.3f}", *seed.fitness);
  population.push_back(seed);
  result.lineage.push_back(seed);
  double best = *seed.fitness;
  result.best_so_far.push_back(best);
  Rng rng(config.seed);

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const std::size_t k = std::min(config.top_k, population.size());
    const auto picks = boltzmann_select(population, k, config.temperature, rng);
    std::vector<const PromptGenome*> parents;
    for (std::size_t p : picks) parents.push_back(&population[p]);

    gateway::ChatRequest req;
    req.system_prompt = std::string(prompts::asset("crossover_system.txt"));
    req.user_prompt = crossover_input(parents);
    req.model_name = config.crossover_model;
    req.seed = text::mix64(config.seed, it);
    config.crossover_decoding.apply(req);
    std::string child_text;
    try {
      child_text = text::trim(strip_code_fences(crossover_backend.chat_complete(req).text));
    } catch (const Error& e) {
      spdlog::warn("evolve iteration {}: crossover failed: {}", it, e.what());
    }
    if (child_text.empty()) {
      ++result.skipped_iterations;
      result.best_so_far.push_back(best);
      spdlog::warn("evolve iteration {}: skipped (no child prompt)", it);
      continue;
    }
    PromptGenome child;
    child.id = "g" + std::to_string(result.lineage.size());
    child.prompt_text = std::move(child_text);
    for (const auto* p : parents) {
      child.generation_index = std::max(child.generation_index, p->generation_index + 1);
      child.parent_ids.push_back(p->id);
    }
    try {
      evaluate_fitness(child, gold, extraction_backend, config.fitness, cache);
    } catch (const Error& e) {
      spdlog::warn("evolve iteration {}: {}", it, e.what());
      result.lineage.push_back(std::move(child));
      ++result.skipped_iterations;
      result.best_so_far.push_back(best);
      continue;
    }
    spdlog::info("evolve iteration {}: {} fitness {:.3f} (parents {})", it, child.id, *child.fitness,
                 text::join(child.parent_ids, ","));
    best = std::max(best, *child.fitness);
    result.lineage.push_back(child);
    population.push_back(std::move(child));
    result.best_so_far.push_back(best);
  }
  // Highest fitness; the earliest genome wins ties.
  const PromptGenome* top = &population.front();
  for (const auto& g : population) {
    if (*g.fitness > *top->fitness) top = &g;
  }
  result.best = *top;
  return result;
}

void write_lineage(const std::string& path, std::span<const PromptGenome> lineage) {
  JsonlWriter out(path);
  for (const auto& g : lineage) out.write(genome_to_json(g));
  out.commit();
}

}  // namespace hypadv::evolver

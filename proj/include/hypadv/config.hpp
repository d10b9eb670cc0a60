#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hypadv/gateway.hpp"
#include "hypadv/json_io.hpp"

namespace hypadv::config {

struct EndpointConfig {
  std::string base_url;
  std::string api_key_env = "OPENAI_API_KEY";
  std::int64_t timeout_ms = 120000;
  int max_attempts = 5;
  std::int64_t base_delay_ms = 500;
  std::int64_t max_delay_ms = 16000;
  std::size_t max_in_flight = 8;
  std::size_t embed_batch_cap = 100;
};

struct ModelNames {
  std::string summarizer;
  std::string extractor;
  std::string crossover;
  std::string teacher;
  std::string advisor;  // initial RAFT generator and `advise` model
  std::string embedding;
};

struct ScorerConfig {
  std::string backend = "reference";  // reference | remote
  std::string url;
  std::size_t feature_dim = 1024;
};

struct TrainerConfig {
  std::vector<std::string> command{"train"};
  std::string url;  // when set, the HTTP trainer is used instead of the command
};

struct RunConfig {
  std::string backend = "mock";  // mock | http
  std::uint64_t seed = 0;
  std::size_t workers = 8;
  std::size_t mock_embedding_dim = 256;
  EndpointConfig endpoint;
  ModelNames models;

  gateway::DecodingParams advise_decoding{0.6, 0.95, 1.0, 4096};
  gateway::DecodingParams raft_decoding{0.7, 0.8, 1.05, 4096};
  gateway::DecodingParams summarize_decoding{0.2, 0.95, 1.0, 2048};
  gateway::DecodingParams extract_decoding{0.7, 0.95, 1.0, 2048};
  gateway::DecodingParams crossover_decoding{0.7, 0.95, 1.0, 2048};

  std::size_t retrieval_k = 10;
  double contamination_guard = 0.7;  // 1 disables the guard
  std::size_t context_budget = 15000;
  std::string rubrics = "novelty,significance,soundness";
  int repair_retries = 3;

  double alpha = 0.4;
  double lambda = 0.7;
  std::size_t raft_k = 16;
  std::size_t raft_top_k = 1;
  std::size_t papers_per_iteration = 1000;
  std::size_t raft_iterations = 4;
  std::size_t warmup_sample = 4000;

  std::size_t ga_top_k = 5;
  std::size_t ga_iterations = 28;
  double ga_temperature = 1.0;
  std::string lcs_unit = "characters";  // characters | tokens
  double levenshtein_threshold = 0.8;
  double lcs_threshold = 0.3;
  std::size_t self_consistency = 1;

  ScorerConfig scorer;
  TrainerConfig trainer;

  // File locations; excluded from the config hash.
  std::map<std::string, std::string> paths;
};

// Built-in defaults as JSON; the layering base.
json default_json();

// Throws Error(kUsage) on keys that are not part of the schema.
RunConfig from_json(const json& j);

// Environment overrides: HYPADV_BACKEND, HYPADV_SEED, HYPADV_BASE_URL,
// HYPADV_WORKERS, HYPADV_SCORER_URL, as a merge patch.
json env_patch(const std::map<std::string, std::string>& env);
json env_patch_from_process();

// Parses "a.b.c=value" into a nested patch. The value is read as JSON when
// it parses, else taken as a string.
json assignment_patch(const std::string& assignment);

// defaults <- file <- env <- flag patches, each applied as a JSON merge patch.
json layer(const std::optional<std::string>& file, const json& env, const std::vector<json>& flags);

// SHA-256 over the canonical dump of the effective config without "paths".
std::string config_hash(const json& effective);

}  // namespace hypadv::config

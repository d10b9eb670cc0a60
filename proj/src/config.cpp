#include "hypadv/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "hypadv/error.hpp"
#include "hypadv/text.hpp"

namespace hypadv::gateway {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DecodingParams, temperature, top_p, repetition_penalty, max_tokens)
}

namespace hypadv::config {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EndpointConfig, base_url, api_key_env, timeout_ms, max_attempts,
                                                base_delay_ms, max_delay_ms, max_in_flight, embed_batch_cap)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelNames, summarizer, extractor, crossover, teacher, advisor,
                                                embedding)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScorerConfig, backend, url, feature_dim)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainerConfig, command, url)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, backend, seed, workers, mock_embedding_dim, endpoint, models,
                                                advise_decoding, raft_decoding, summarize_decoding, extract_decoding,
                                                crossover_decoding, retrieval_k, contamination_guard, context_budget,
                                                rubrics, repair_retries, alpha, lambda, raft_k, raft_top_k,
                                                papers_per_iteration, raft_iterations, warmup_sample, ga_top_k,
                                                ga_iterations, ga_temperature, lcs_unit, levenshtein_threshold,
                                                lcs_threshold, self_consistency, scorer, trainer, paths)

json default_json() { return json(RunConfig{}); }

namespace {

void check_known(const json& value, const json& schema, const std::string& prefix) {
  for (const auto& [key, v] : value.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) throw Error(ErrorKind::kUsage, "unknown config key: " + path);
    if (key != "paths" && v.is_object() && schema[key].is_object()) check_known(v, schema[key], path);
  }
}

}  // namespace

RunConfig from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kUsage, "config must be a JSON object");
  check_known(j, default_json(), "");
  try {
    return j.get<RunConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kUsage, std::string("invalid config: ") + e.what());
  }
}

json env_patch(const std::map<std::string, std::string>& env) {
  json patch = json::object();
  auto get = [&](const char* name) -> const std::string* {
    auto it = env.find(name);
    return it == env.end() || it->second.empty() ? nullptr : &it->second;
  };
  auto number = [](const std::string& name, const std::string& v) {
    // stoull accepts a sign and wraps negatives.
    if (v.empty() || !std::isdigit(static_cast<unsigned char>(v[0]))) {
      throw Error(ErrorKind::kUsage, name + " must be a non-negative integer");
    }
    try {
      std::size_t used = 0;
      const auto n = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return n;
    } catch (const std::exception&) {
      throw Error(ErrorKind::kUsage, name + " must be a non-negative integer");
    }
  };
  if (auto v = get("HYPADV_BACKEND")) patch["backend"] = *v;
  if (auto v = get("HYPADV_SEED")) patch["seed"] = number("HYPADV_SEED", *v);
  if (auto v = get("HYPADV_WORKERS")) patch["workers"] = number("HYPADV_WORKERS", *v);
  if (auto v = get("HYPADV_BASE_URL")) patch["endpoint"]["base_url"] = *v;
  if (auto v = get("HYPADV_SCORER_URL")) patch["scorer"]["url"] = *v;
  return patch;
}

json env_patch_from_process() {
  std::map<std::string, std::string> env;
  for (const char* name : {"HYPADV_BACKEND", "HYPADV_SEED", "HYPADV_WORKERS", "HYPADV_BASE_URL", "HYPADV_SCORER_URL"}) {
    if (const char* v = std::getenv(name)) env[name] = v;
  }
  return env_patch(env);
}

json assignment_patch(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::kUsage, "expected key=value, got " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json patch = json::object();
  json* cur = &patch;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorKind::kUsage, "bad config key: " + key);
    if (dot == std::string::npos) {
      (*cur)[part] = value;
      break;
    }
    cur = &(*cur)[part];
    start = dot + 1;
  }
  return patch;
}

json layer(const std::optional<std::string>& file, const json& env, const std::vector<json>& flags) {
  json effective = default_json();
  if (file) {
    const json f = json::parse(read_text_file(*file), nullptr, false);
    if (f.is_discarded() || !f.is_object()) throw Error(ErrorKind::kUsage, *file + ": config is not a JSON object");
    check_known(f, effective, "");
    effective.merge_patch(f);
  }
  effective.merge_patch(env);
  for (const auto& p : flags) {
    check_known(p, effective, "");
    effective.merge_patch(p);
  }
  from_json(effective);  // validates types
  return effective;
}

std::string config_hash(const json& effective) {
  json copy = effective;
  copy.erase("paths");
  return text::sha256_hex(copy.dump());
}

}  // namespace hypadv::config

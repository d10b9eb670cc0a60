#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hypadv/corpus.hpp"
#include "hypadv/error.hpp"
#include "hypadv/gateway.hpp"
#include "hypadv/json_io.hpp"
#include "hypadv/vector_index.hpp"

namespace hypadv::advisor {

using index::RetrievalHit;
using SectionHits = std::array<std::vector<RetrievalHit>, 4>;  // kAllSections order

struct HypothesisInput {
  std::string paper_id;  // optional; excluded from retrieval when set
  std::string title;
  std::string abstract;
  std::string contribution;
  std::string method;      // may be empty for early-stage ideas
  std::string experiment;  // may be empty for early-stage ideas

  // Throws Error(kUsage) listing every missing required field.
  void validate() const;
  static HypothesisInput from_paper(const corpus::PaperRecord& p);
  // Text used to query the index of one section. Empty method or experiment
  // fields fall back to abstract plus contribution.
  std::string query_text(corpus::Section s) const;
};

struct RubricConfig {
  bool novelty = true;
  bool significance = true;
  bool soundness = true;

  static RubricConfig all() { return {}; }
  static RubricConfig none() { return {false, false, false}; }
  // Comma-separated subset of {novelty, significance, soundness}; "" or
  // "none" selects nothing. Throws Error(kUsage) on an unknown name.
  static RubricConfig parse(std::string_view list);
  std::string to_string() const;
  bool operator==(const RubricConfig&) const = default;
};

// Whitespace tokens times 1.3, rounded up.
std::size_t estimate_tokens(std::string_view text);

std::string build_system_prompt(const RubricConfig& rubrics);

struct AssembleOptions {
  RubricConfig rubrics;
  std::size_t context_budget = 15000;
  // Display name for a retrieved paper; defaults to the paper id.
  std::function<std::string(const std::string& paper_id)> title_of;
};

struct AssembledContext {
  std::string system_prompt;
  std::string user_prompt;
  SectionHits hits;  // what survived truncation
  std::size_t token_estimate = 0;
  std::size_t dropped_hits = 0;
};

// Fills the prompt templates. While over budget, drops the lowest-scoring hit
// of the section whose retrieved block is currently largest (ties by section
// order). Throws Error(kAssembly) when the target alone exceeds the budget.
AssembledContext assemble_context(const HypothesisInput& target, SectionHits hits, const AssembleOptions& options);

inline constexpr std::array<std::string_view, 9> kAdviceKeys = {
    "summary",   "comparison with previous works", "novelty",    "significance", "soundness",
    "strengths", "weaknesses",                     "evaluation", "suggestion"};

struct StructuredAdvice {
  std::array<std::string, 9> fields;  // kAdviceKeys order
  std::map<std::string, json> extra;  // unknown keys, kept for audit

  const std::string& operator[](std::string_view key) const;
  std::string& operator[](std::string_view key);
  bool operator==(const StructuredAdvice&) const = default;
};

// Throws Error(kAdvising) on invalid JSON, missing keys (all of them listed),
// or empty values.
StructuredAdvice parse_advice(std::string_view raw);
// The nine keys in schema order, then extras.
ordered_json advice_to_json(const StructuredAdvice& advice);
std::string serialize_advice(const StructuredAdvice& advice);
// Field values joined by newlines; the text scored against reviews.
std::string advice_plain_text(const StructuredAdvice& advice);

struct RetrievalConfig {
  std::size_t k = 10;
  std::optional<double> contamination_guard = 0.7;
  std::function<bool(const std::string& paper_id)> admit;
};

SectionHits retrieve(const HypothesisInput& target, const index::IndexSet& indexes, gateway::LlmBackend& backend,
                     const RetrievalConfig& config);

struct AdviseConfig {
  RetrievalConfig retrieval;
  AssembleOptions assemble;
  gateway::DecodingParams decoding{0.6, 0.95, 1.0, 4096};
  std::string model_name;
  int repair_retries = 3;
  std::uint64_t seed = 0;
};

struct Attempt {
  std::string request_id;
  std::string raw;
  std::string problem;  // empty when the attempt parsed
};

struct Transcript {
  AssembledContext context;
  std::vector<Attempt> attempts;
  std::string model_name;
  gateway::DecodingParams decoding;
  std::uint64_t seed = 0;
};

ordered_json transcript_to_json(const Transcript& t);

class AdvisingError : public Error {
 public:
  AdvisingError(const std::string& message, Transcript transcript)
      : Error(ErrorKind::kAdvising, message), transcript_(std::move(transcript)) {}
  const Transcript& transcript() const { return transcript_; }

 private:
  Transcript transcript_;
};

struct AdviceResult {
  StructuredAdvice advice;
  Transcript transcript;
};

// Generation with the context already assembled. Invalid output is retried
// with a corrective instruction up to `repair_retries` times.
AdviceResult generate(const AssembledContext& context, gateway::LlmBackend& backend, const AdviseConfig& config);

AdviceResult advise(const HypothesisInput& target, const index::IndexSet& indexes, gateway::LlmBackend& backend,
                    const AdviseConfig& config);

}  // namespace hypadv::advisor

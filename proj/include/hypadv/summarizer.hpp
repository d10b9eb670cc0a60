#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hypadv/error.hpp"
#include "hypadv/gateway.hpp"

namespace hypadv::summarizer {

struct LlmCallConfig {
  std::string model_name;
  gateway::DecodingParams decoding{0.7, 0.95, 1.0, 2048};
  int repair_retries = 3;
  std::uint64_t seed = 0;
};

struct SectionSummaries {
  std::string abstract_summary;
  std::string contribution_summary;
  std::string method_summary;
  std::string experiment_summary;
  double compression_ratio = 0.0;  // source tokens / summary tokens
  std::vector<std::string> warnings;
};

inline constexpr double kMinCompressionRatio = 8.0;
inline constexpr std::size_t kShortSourceTokens = 100;

// Throws Error(kExtraction) if no valid JSON with the four keys is obtained
// after the repair retries.
SectionSummaries summarize_sections(std::string_view fulltext, std::string_view prompt, gateway::LlmBackend& backend,
                                    const LlmCallConfig& config);

struct ContributionExtraction {
  int contribution_label = 0;
  std::string contribution_text;
  bool verbatim_verified = false;  // label 1 only
  std::size_t samples = 0;
  std::size_t agreeing_samples = 0;
  std::vector<std::string> warnings;
};

// Heading-based lookup of the introduction in markdown full text: the first
// heading mentioning "introduction", else the first heading after an
// "abstract" heading, else the second heading. Returns the section body.
std::optional<std::string> introduction_section(std::string_view markdown);

// Whitespace-normalized, list-marker-insensitive substring test.
bool is_verbatim(std::string_view extracted, std::string_view source);

// Runs the extraction prompt `samples` times and takes the majority label
// (ties go to the first sample's label). Label-1 text that fails the verbatim
// check after repairs is downgraded to label 0; label-0 text is cut to three
// sentences. Throws Error(kExtraction) when no introduction is found or no
// sample yields valid JSON.
ContributionExtraction extract_contribution(std::string_view fulltext, std::string_view prompt,
                                            gateway::LlmBackend& backend, const LlmCallConfig& config,
                                            std::size_t samples = 1);

}  // namespace hypadv::summarizer

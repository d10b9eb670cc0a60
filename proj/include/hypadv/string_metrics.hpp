#pragma once

#include <cstddef>
#include <string_view>

namespace hypadv::evolver {

// Unit-cost insert/delete/substitute distance over bytes.
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

enum class LcsUnit { kCharacters, kWhitespaceTokens };

std::size_t lcs_length(std::string_view a, std::string_view b, LcsUnit unit = LcsUnit::kCharacters);
// Length of `s` in the given unit.
std::size_t unit_length(std::string_view s, LcsUnit unit);

struct MatchThresholds {
  double levenshtein_similarity = 0.8;
  double lcs_ratio = 0.3;
};

struct MatchResult {
  bool match = false;
  std::size_t distance = 0;
  double levenshtein_similarity = 0.0;  // 1 - dist / max(|a|,|b|)
  std::size_t lcs = 0;
  double lcs_ratio = 0.0;               // lcs / |gold|
};

// Throws Error(kUsage) when gold is empty.
MatchResult match_score(std::string_view extracted, std::string_view gold,
                        MatchThresholds thresholds = {}, LcsUnit unit = LcsUnit::kCharacters);

}  // namespace hypadv::evolver

#include "hypadv/string_metrics.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "hypadv/error.hpp"
#include "hypadv/text.hpp"

namespace hypadv::evolver {

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Row over the shorter string.
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

namespace {

template <typename Seq>
std::size_t lcs_of(const Seq& a, const Seq& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = (a[i - 1] == b[j - 1]) ? diag + 1 : std::max(up, row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace

std::size_t lcs_length(std::string_view a, std::string_view b, LcsUnit unit) {
  if (unit == LcsUnit::kCharacters) return lcs_of(a, b);
  return lcs_of(text::split_whitespace(a), text::split_whitespace(b));
}

std::size_t unit_length(std::string_view s, LcsUnit unit) {
  return unit == LcsUnit::kCharacters ? s.size() : text::count_tokens(s);
}

MatchResult match_score(std::string_view extracted, std::string_view gold, MatchThresholds thresholds,
                        LcsUnit unit) {
  if (gold.empty()) throw Error(ErrorKind::kUsage, "match_score: empty gold text");
  MatchResult r;
  r.distance = levenshtein_distance(extracted, gold);
  const std::size_t longest = std::max(extracted.size(), gold.size());
  r.levenshtein_similarity = 1.0 - static_cast<double>(r.distance) / static_cast<double>(longest);
  r.lcs = lcs_length(extracted, gold, unit);
  const std::size_t gold_len = unit_length(gold, unit);
  r.lcs_ratio = gold_len == 0 ? 0.0 : static_cast<double>(r.lcs) / static_cast<double>(gold_len);
  // Compare in count space so exact boundaries (e.g. 3/10 vs 0.3) are not
  // lost to rounding in the division.
  constexpr double kEps = 1e-9;
  const bool lev_ok = static_cast<double>(longest - r.distance) + kEps >=
                      thresholds.levenshtein_similarity * static_cast<double>(longest);
  const bool lcs_ok = gold_len > 0 && static_cast<double>(r.lcs) + kEps >=
                                          thresholds.lcs_ratio * static_cast<double>(gold_len);
  r.match = lev_ok || lcs_ok;
  return r;
}

}  // namespace hypadv::evolver

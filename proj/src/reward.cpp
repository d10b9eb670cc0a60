#include "hypadv/reward.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "hypadv/error.hpp"
#include "hypadv/text.hpp"

namespace hypadv::reward {

double RatingDistribution::sum() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

RatingDistribution empirical_distribution(std::span<const int> ratings) {
  if (ratings.empty()) throw Error(ErrorKind::kUsage, "empirical_distribution: no ratings");
  std::array<std::size_t, kNumRatings> counts{};
  for (int r : ratings) {
    if (r < 1 || r > kNumRatings) {
      throw Error(ErrorKind::kUsage, "rating out of range: " + std::to_string(r));
    }
    ++counts[static_cast<std::size_t>(r - 1)];
  }
  RatingDistribution d;
  const double n = static_cast<double>(ratings.size());
  for (std::size_t i = 0; i < counts.size(); ++i) d.probs[i] = static_cast<double>(counts[i]) / n;
  return d;
}

RatingDistribution smooth(const RatingDistribution& dist, double alpha, bool renormalize) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::kUsage, "alpha must be in [0,1]");
  const auto& p = dist.probs;
  constexpr std::size_t last = kNumRatings - 1;
  RatingDistribution out;
  out.probs[0] = (1.0 - alpha) * p[0] + alpha * p[1];
  for (std::size_t j = 1; j < last; ++j) {
    out.probs[j] = (1.0 - alpha) * p[j] + (alpha / 2.0) * (p[j - 1] + p[j + 1]);
  }
  out.probs[last] = (1.0 - alpha) * p[last] + alpha * p[last - 1];
  if (renormalize) {
    const double s = out.sum();
    if (s > 0.0) {
      for (double& x : out.probs) x /= s;
    }
  }
  return out;
}

double rating_reward(const RatingDistribution& predicted, const RatingDistribution& smoothed) {
  double s = 0.0;
  for (std::size_t j = 0; j < kNumRatings; ++j) s += predicted.probs[j] * smoothed.probs[j];
  return s;
}

namespace {

std::vector<std::string> rouge_tokens(std::string_view s) { return text::split_whitespace(text::to_lower(s)); }

double f1(double overlap, std::size_t cand_count, std::size_t ref_count) {
  if (overlap <= 0.0 || cand_count == 0 || ref_count == 0) return 0.0;
  const double precision = overlap / static_cast<double>(cand_count);
  const double recall = overlap / static_cast<double>(ref_count);
  return 2.0 * precision * recall / (precision + recall);
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

double rouge_n(const std::vector<std::string>& cand, const std::vector<std::string>& ref, std::size_t n) {
  const auto cc = ngram_counts(cand, n);
  const auto rc = ngram_counts(ref, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cc) {
    if (auto it = rc.find(gram); it != rc.end()) overlap += std::min(count, it->second);
  }
  const std::size_t cand_total = cand.size() >= n ? cand.size() - n + 1 : 0;
  const std::size_t ref_total = ref.size() >= n ? ref.size() - n + 1 : 0;
  return f1(static_cast<double>(overlap), cand_total, ref_total);
}

std::size_t token_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
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

RougeTriple rouge_scores(std::string_view candidate, std::string_view reference) {
  const auto cand = rouge_tokens(candidate);
  const auto ref = rouge_tokens(reference);
  RougeTriple r;
  if (cand.empty() || ref.empty()) return r;
  r.rouge1 = rouge_n(cand, ref, 1);
  r.rouge2 = rouge_n(cand, ref, 2);
  r.rougeL = f1(static_cast<double>(token_lcs(cand, ref)), cand.size(), ref.size());
  return r;
}

double rouge_l_f1(std::string_view candidate, std::string_view reference) {
  const auto cand = rouge_tokens(candidate);
  const auto ref = rouge_tokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  return f1(static_cast<double>(token_lcs(cand, ref)), cand.size(), ref.size());
}

RewardBreakdown combined_reward(double rating, const RougeTriple& rouge, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::kUsage, "lambda must be in [0,1]");
  RewardBreakdown b;
  b.rating_reward = rating;
  b.rouge1 = rouge.rouge1;
  b.rouge2 = rouge.rouge2;
  b.rougeL = rouge.rougeL;
  b.text_reward = (rouge.rouge1 + rouge.rouge2 + rouge.rougeL) / 3.0;
  b.combined = lambda * rating + (1.0 - lambda) * b.text_reward;
  b.lambda = lambda;
  return b;
}

std::size_t select_best_of_n(std::span<const double> combined) {
  if (combined.empty()) throw Error(ErrorKind::kSelection, "select_best_of_n: no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < combined.size(); ++i) {
    if (combined[i] > combined[best]) best = i;
  }
  return best;
}

std::size_t select_best_of_n(std::span<const RewardBreakdown> candidates) {
  std::vector<double> combined;
  combined.reserve(candidates.size());
  for (const auto& c : candidates) combined.push_back(c.combined);
  return select_best_of_n(combined);
}

std::vector<std::size_t> select_top_k(std::span<const double> combined, std::size_t top_k) {
  if (combined.empty()) throw Error(ErrorKind::kSelection, "select_top_k: no candidates");
  std::vector<std::size_t> order(combined.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return combined[a] > combined[b]; });
  order.resize(std::min(top_k, order.size()));
  return order;
}

}  // namespace hypadv::reward

#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace hypadv::reward {

inline constexpr int kNumRatings = 10;

// Probability vector over ratings 1..10; probs[0] is rating 1.
struct RatingDistribution {
  std::array<double, kNumRatings> probs{};

  double operator[](int rating) const { return probs[static_cast<std::size_t>(rating - 1)]; }
  double sum() const;
  bool operator==(const RatingDistribution&) const = default;
};

// Throws Error(kUsage) on an empty list or a rating outside 1..10.
RatingDistribution empirical_distribution(std::span<const int> ratings);

// Neighbor smoothing, applied exactly as the three-case formula: interior
// classes average both neighbours, the end classes take their single
// neighbour with full weight. The result is not mass-preserving; its sum is
// 1 + (alpha/2)(p2 + p9 - p1 - p10). `renormalize` divides by the sum.
RatingDistribution smooth(const RatingDistribution& dist, double alpha, bool renormalize = false);

// Dot product of predicted and smoothed human distributions.
double rating_reward(const RatingDistribution& predicted, const RatingDistribution& smoothed);

struct RougeTriple {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
};

// F1 scores over lowercased whitespace tokens, no stemming or stopwords.
RougeTriple rouge_scores(std::string_view candidate, std::string_view reference);
// ROUGE-L F1 only; used by the retrieval contamination guard.
double rouge_l_f1(std::string_view candidate, std::string_view reference);

struct RewardBreakdown {
  double rating_reward = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double text_reward = 0.0;
  double combined = 0.0;
  double lambda = 0.0;
};

// text = (R1 + R2 + RL) / 3; combined = lambda*rating + (1 - lambda)*text.
// At lambda = 0.7 this is 0.7*rating + 0.1*(R1 + R2 + RL).
RewardBreakdown combined_reward(double rating_reward, const RougeTriple& rouge, double lambda);

// Argmax of combined reward; ties go to the lowest index. Throws on empty input.
std::size_t select_best_of_n(std::span<const double> combined);
std::size_t select_best_of_n(std::span<const RewardBreakdown> candidates);

// Indices of the `top_k` highest rewards, best first, ties by lower index.
std::vector<std::size_t> select_top_k(std::span<const double> combined, std::size_t top_k);

}  // namespace hypadv::reward

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hypadv/gateway.hpp"
#include "hypadv/reward.hpp"

namespace hypadv::classifier {

using reward::RatingDistribution;

struct ClassifierInput {
  std::string advice;  // serialized structured advice
  std::string abstract;
  std::string contribution;

  // Throws Error(kUsage) naming the empty fields.
  void validate() const;
};

struct ScoredPrediction {
  RatingDistribution distribution;
  double entropy = 0.0;  // natural log
  double expected_rating = 0.0;
};

double entropy(const RatingDistribution& d);
double expected_rating(const RatingDistribution& d);

// Throws Error(kIntegrity) unless every entry is finite and non-negative and
// the entries sum to 1 within `tolerance`.
void validate_distribution(const RatingDistribution& d, double tolerance = 1e-6);

class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  virtual RatingDistribution predict(const ClassifierInput& input) = 0;
  virtual std::string name() const = 0;
};

ScoredPrediction score(const ClassifierInput& input, ScoringBackend& backend);

// Remote scorer over HTTP: POST {advice, abstract, contribution}, expects
// {"probs": [10 numbers]}.
class RemoteScorer final : public ScoringBackend {
 public:
  RemoteScorer(std::string url, std::shared_ptr<gateway::Transport> transport, gateway::RetryPolicy retry = {},
               std::chrono::milliseconds timeout = std::chrono::milliseconds(60000),
               std::function<void(std::chrono::milliseconds)> sleep = {});

  RatingDistribution predict(const ClassifierInput& input) override;
  std::string name() const override { return "remote:" + url_; }

 private:
  std::string url_;
  gateway::RetryingPoster poster_;
};

// Hashed bag-of-words features over the concatenated input; L2-normalized.
std::vector<double> featurize(const ClassifierInput& input, std::size_t dim);

struct TrainingExample {
  ClassifierInput input;
  RatingDistribution target;
};

struct FitOptions {
  std::size_t epochs = 30;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

// Offline reference scorer: multinomial logistic regression on hashed
// features. Weights file format: a header line "hashed-bow-logreg 10 <dim>",
// ten lines of <dim> weights, then one line of ten biases.
class ReferenceScorer final : public ScoringBackend {
 public:
  explicit ReferenceScorer(std::size_t dim);
  static ReferenceScorer load(const std::string& path);
  // Small random weights; usable for plumbing but not a trained model.
  static ReferenceScorer seeded(std::size_t dim, std::uint64_t seed);

  void save(const std::string& path) const;
  RatingDistribution predict(const ClassifierInput& input) override;
  std::string name() const override { return "reference"; }

  // Soft-target SGD on cross-entropy; returns the final mean loss.
  double fit(const std::vector<TrainingExample>& examples, const FitOptions& options);

  std::size_t dim() const { return dim_; }

 private:
  RatingDistribution predict_features(const std::vector<double>& x) const;

  std::size_t dim_;
  std::vector<double> weights_;  // 10 x dim, row-major
  std::array<double, reward::kNumRatings> bias_{};
};

}  // namespace hypadv::classifier

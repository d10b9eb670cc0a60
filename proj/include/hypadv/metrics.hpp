#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypadv/json_io.hpp"

namespace hypadv::metrics {

struct RankedPrediction {
  std::string paper_id;
  double expected_rating = 0.0;
  double entropy = 0.0;
  std::optional<bool> accepted;
  std::optional<bool> decision;  // explicit accept/reject, when the producer made one
};

std::vector<RankedPrediction> load_predictions(const std::string& path);

// max(1, floor(fraction * n)).
std::size_t head_size(double fraction, std::size_t n);

// Indices sorted by expected rating descending, then entropy ascending, then
// paper id ascending.
std::vector<std::size_t> rank_order(std::span<const RankedPrediction> rows);

// Accepted share of the top `fraction` by expected rating. Throws
// Error(kMetric) on an empty input or an unlabeled row.
double topk_precision(std::span<const RankedPrediction> rows, double fraction);

// Share of all accepted papers found in the top `fraction`.
double accept_recall(std::span<const RankedPrediction> rows, double fraction = 0.3);

struct AccuracyF1 {
  double accuracy = 0.0;  // precision of accept decisions
  double recall = 0.0;
  double f1 = 0.0;
};

AccuracyF1 accuracy_f1(const std::vector<bool>& decisions, const std::vector<bool>& labels);

struct EntropyGrid {
  std::vector<double> confidence_fractions;
  std::vector<double> ranking_fractions;
  // cells[c][r]; nullopt when the confidence subset is empty.
  std::vector<std::vector<std::optional<double>>> cells;
};

// Keeps the lowest-entropy share c of all rows, then computes top-r precision
// inside that subset.
EntropyGrid entropy_stratified_precision(std::span<const RankedPrediction> rows,
                                         std::vector<double> confidence_fractions = {0.1, 0.2, 0.3},
                                         std::vector<double> ranking_fractions = {0.1, 0.2, 0.3});

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double fraction = 0.0;
};

struct RatingStats {
  std::size_t count = 0;
  double mean = 0.0;
  std::optional<double> variance;  // population variance; undefined below 2 values
  std::vector<HistogramBin> histogram;
};

// Histogram over [1, 10] with the given bin width; the last bin is closed.
RatingStats rating_stats(std::span<const double> values, double bin_width = 0.5);

struct EvaluateOptions {
  std::vector<double> topk_fractions = {0.1, 0.2, 0.3};
  double recall_fraction = 0.3;
  // Used for accuracy/F1 when rows carry no explicit decision.
  double decision_fraction = 0.3;
};

ordered_json evaluate(std::span<const RankedPrediction> rows, const EvaluateOptions& options = {});

std::string render_markdown(const json& report);

}  // namespace hypadv::metrics

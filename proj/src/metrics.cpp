#include "hypadv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hypadv/error.hpp"

namespace hypadv::metrics {

std::vector<RankedPrediction> load_predictions(const std::string& path) {
  std::vector<RankedPrediction> rows;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    const json j = json::parse(line, nullptr, false);
    const std::string where = path + ":" + std::to_string(line_no);
    if (!j.is_object()) throw Error(ErrorKind::kIntegrity, where + ": malformed JSON");
    RankedPrediction r;
    try {
      r.paper_id = j.at("paper_id").get<std::string>();
      r.expected_rating = j.at("expected_rating").get<double>();
      r.entropy = j.at("entropy").get<double>();
      if (auto it = j.find("accepted"); it != j.end() && !it->is_null()) r.accepted = it->get<bool>();
      if (auto it = j.find("decision"); it != j.end() && !it->is_null()) r.decision = it->get<bool>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kIntegrity, where + ": " + e.what());
    }
    rows.push_back(std::move(r));
  });
  return rows;
}

std::size_t head_size(double fraction, std::size_t n) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorKind::kUsage, "fraction must be in (0,1]");
  // The epsilon keeps exact products such as 0.3 * 10 from flooring to 2.
  const auto m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  return std::max<std::size_t>(1, m);
}

std::vector<std::size_t> rank_order(std::span<const RankedPrediction> rows) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = rows[a];
    const auto& y = rows[b];
    if (x.expected_rating != y.expected_rating) return x.expected_rating > y.expected_rating;
    if (x.entropy != y.entropy) return x.entropy < y.entropy;
    return x.paper_id < y.paper_id;
  });
  return order;
}

namespace {

void require_labeled(std::span<const RankedPrediction> rows) {
  if (rows.empty()) throw Error(ErrorKind::kMetric, "no predictions");
  for (const auto& r : rows) {
    if (!r.accepted) throw Error(ErrorKind::kMetric, "unlabeled row: " + r.paper_id);
  }
}

}  // namespace

double topk_precision(std::span<const RankedPrediction> rows, double fraction) {
  require_labeled(rows);
  const auto order = rank_order(rows);
  const std::size_t m = head_size(fraction, rows.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < m; ++i) hits += *rows[order[i]].accepted ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(m);
}

double accept_recall(std::span<const RankedPrediction> rows, double fraction) {
  require_labeled(rows);
  const std::size_t total =
      static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return *r.accepted; }));
  if (total == 0) throw Error(ErrorKind::kMetric, "recall undefined: no accepted papers");
  const auto order = rank_order(rows);
  const std::size_t m = head_size(fraction, rows.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < m; ++i) hits += *rows[order[i]].accepted ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(total);
}

AccuracyF1 accuracy_f1(const std::vector<bool>& decisions, const std::vector<bool>& labels) {
  if (decisions.size() != labels.size()) throw Error(ErrorKind::kMetric, "decision and label counts differ");
  if (decisions.empty()) throw Error(ErrorKind::kMetric, "no predictions");
  std::size_t tp = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    predicted += decisions[i] ? 1 : 0;
    actual += labels[i] ? 1 : 0;
    tp += (decisions[i] && labels[i]) ? 1 : 0;
  }
  if (predicted == 0) throw Error(ErrorKind::kMetric, "accuracy undefined: no predicted accepts");
  if (actual == 0) throw Error(ErrorKind::kMetric, "recall undefined: no actual accepts");
  AccuracyF1 out;
  out.accuracy = static_cast<double>(tp) / static_cast<double>(predicted);
  out.recall = static_cast<double>(tp) / static_cast<double>(actual);
  const double denom = out.accuracy + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.accuracy * out.recall / denom : 0.0;
  return out;
}

EntropyGrid entropy_stratified_precision(std::span<const RankedPrediction> rows,
                                         std::vector<double> confidence_fractions,
                                         std::vector<double> ranking_fractions) {
  require_labeled(rows);
  for (const auto& r : rows) {
    if (!std::isfinite(r.entropy)) throw Error(ErrorKind::kMetric, "missing entropy: " + r.paper_id);
  }
  std::vector<std::size_t> by_entropy(rows.size());
  std::iota(by_entropy.begin(), by_entropy.end(), 0);
  std::stable_sort(by_entropy.begin(), by_entropy.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a].entropy != rows[b].entropy) return rows[a].entropy < rows[b].entropy;
    return rows[a].paper_id < rows[b].paper_id;
  });
  EntropyGrid grid{std::move(confidence_fractions), std::move(ranking_fractions), {}};
  for (double c : grid.confidence_fractions) {
    if (!(c > 0.0 && c <= 1.0)) throw Error(ErrorKind::kUsage, "fraction must be in (0,1]");
    const auto keep = static_cast<std::size_t>(std::floor(c * static_cast<double>(rows.size()) + 1e-9));
    std::vector<RankedPrediction> subset;
    for (std::size_t i = 0; i < keep; ++i) subset.push_back(rows[by_entropy[i]]);
    std::vector<std::optional<double>> line;
    for (double r : grid.ranking_fractions) {
      if (subset.empty()) {
        line.emplace_back(std::nullopt);
      } else {
        line.emplace_back(topk_precision(subset, r));
      }
    }
    grid.cells.push_back(std::move(line));
  }
  return grid;
}

RatingStats rating_stats(std::span<const double> values, double bin_width) {
  if (values.empty()) throw Error(ErrorKind::kMetric, "rating_stats: no values");
  if (!(bin_width > 0.0)) throw Error(ErrorKind::kUsage, "bin width must be positive");
  RatingStats s;
  s.count = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / static_cast<double>(values.size());
  }
  constexpr double lo = 1.0;
  constexpr double hi = 10.0;
  const auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / bin_width - 1e-9));
  for (std::size_t b = 0; b < bins; ++b) {
    s.histogram.push_back({lo + static_cast<double>(b) * bin_width,
                           std::min(hi, lo + static_cast<double>(b + 1) * bin_width), 0, 0.0});
  }
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / bin_width);
    if (b >= bins) b = bins - 1;
    ++s.histogram[b].count;
  }
  for (auto& bin : s.histogram) bin.fraction = static_cast<double>(bin.count) / static_cast<double>(s.count);
  return s;
}

namespace {

std::string pct_key(double f) { return "top_" + std::to_string(static_cast<int>(std::lround(f * 100))) + "%"; }

ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

ordered_json evaluate(std::span<const RankedPrediction> rows, const EvaluateOptions& options) {
  require_labeled(rows);
  ordered_json report;
  report["count"] = rows.size();
  const auto accepted =
      static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return *r.accepted; }));
  report["acceptance_rate"] = static_cast<double>(accepted) / static_cast<double>(rows.size());
  ordered_json topk;
  for (double f : options.topk_fractions) topk[pct_key(f)] = topk_precision(rows, f);
  report["topk_precision"] = std::move(topk);
  report["accept_recall"] = {{"fraction", options.recall_fraction},
                             {"value", accepted ? ordered_json(accept_recall(rows, options.recall_fraction))
                                                : ordered_json(nullptr)}};

  const bool explicit_decisions = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.decision; });
  std::vector<bool> decisions(rows.size(), false);
  if (explicit_decisions) {
    for (std::size_t i = 0; i < rows.size(); ++i) decisions[i] = *rows[i].decision;
  } else {
    const auto order = rank_order(rows);
    const std::size_t m = head_size(options.decision_fraction, rows.size());
    for (std::size_t i = 0; i < m; ++i) decisions[order[i]] = true;
  }
  std::vector<bool> labels;
  for (const auto& r : rows) labels.push_back(*r.accepted);
  report["decisions"] = explicit_decisions ? "explicit" : pct_key(options.decision_fraction);
  const bool any_decision = std::find(decisions.begin(), decisions.end(), true) != decisions.end();
  if (any_decision && accepted > 0) {
    const auto af = accuracy_f1(decisions, labels);
    report["accuracy"] = af.accuracy;
    report["recall"] = af.recall;
    report["f1"] = af.f1;
  } else {
    // Undefined ratios are reported as null rather than failing the whole report.
    report["accuracy"] = nullptr;
    report["recall"] = nullptr;
    report["f1"] = nullptr;
  }

  const auto grid = entropy_stratified_precision(rows);
  ordered_json g;
  g["confidence_fractions"] = grid.confidence_fractions;
  g["ranking_fractions"] = grid.ranking_fractions;
  g["cells"] = ordered_json::array();
  for (const auto& line : grid.cells) {
    ordered_json l = ordered_json::array();
    for (const auto& c : line) l.push_back(optional_number(c));
    g["cells"].push_back(std::move(l));
  }
  report["entropy_grid"] = std::move(g);

  std::vector<double> ratings;
  for (const auto& r : rows) ratings.push_back(r.expected_rating);
  const auto stats = rating_stats(ratings);
  ordered_json st;
  st["count"] = stats.count;
  st["mean"] = stats.mean;
  st["variance"] = optional_number(stats.variance);
  st["histogram"] = ordered_json::array();
  for (const auto& b : stats.histogram) {
    st["histogram"].push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"fraction", b.fraction}});
  }
  report["rating_stats"] = std::move(st);
  return report;
}

std::string render_markdown(const json& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  auto num = [&](const json& v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    if (v.is_number()) {
      s << v.get<double>();
    } else {
      s << "n/a";
    }
    return s.str();
  };
  out << "# Evaluation report\n\n";
  out << "Papers: " << report.value("count", 0) << "  \nAcceptance rate: " << num(report.value("acceptance_rate", json()))
      << "\n\n";
  out << "## Top-k precision\n\n| Head | Precision |\n|---|---|\n";
  const json topk = report.value("topk_precision", json::object());
  for (const auto& [k, v] : topk.items()) out << "| " << k << " | " << num(v) << " |\n";
  const auto rec = report.value("accept_recall", json::object());
  out << "\nAccept recall (head " << num(rec.value("fraction", json())) << "): " << num(rec.value("value", json()))
      << "\n\n";
  out << "## Decisions (" << report.value("decisions", std::string("?")) << ")\n\n| Accuracy | Recall | F1 |\n|---|---|---|\n"
      << "| " << num(report.value("accuracy", json())) << " | " << num(report.value("recall", json())) << " | "
      << num(report.value("f1", json())) << " |\n\n";
  if (report.contains("entropy_grid")) {
    const auto& g = report["entropy_grid"];
    out << "## Precision by entropy stratum\n\n| Lowest-entropy share |";
    for (const auto& r : g["ranking_fractions"]) out << " top " << num(r) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < g["ranking_fractions"].size(); ++i) out << "---|";
    out << "\n";
    for (std::size_t c = 0; c < g["confidence_fractions"].size(); ++c) {
      out << "| " << num(g["confidence_fractions"][c]) << " |";
      for (const auto& cell : g["cells"][c]) out << " " << num(cell) << " |";
      out << "\n";
    }
    out << "\n";
  }
  if (report.contains("rating_stats")) {
    const auto& s = report["rating_stats"];
    out << "## Predicted ratings\n\nMean " << num(s.value("mean", json())) << ", variance "
        << num(s.value("variance", json())) << "\n\n| Bin | Count |\n|---|---|\n";
    const auto& bins = s["histogram"];
    for (std::size_t i = 0; i < bins.size(); ++i) {
      out << "| [" << num(bins[i]["lo"]) << ", " << num(bins[i]["hi"]) << (i + 1 == bins.size() ? "]" : ")") << " | "
          << bins[i]["count"].get<std::size_t>() << " |\n";
    }
  }
  return out.str();
}

}  // namespace hypadv::metrics

#include "hypadv/classifier.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "hypadv/error.hpp"
#include "hypadv/random.hpp"
#include "hypadv/text.hpp"

namespace hypadv::classifier {

using reward::kNumRatings;

void ClassifierInput::validate() const {
  std::vector<std::string> empty;
  if (text::trim(advice).empty()) empty.emplace_back("advice");
  if (text::trim(abstract).empty()) empty.emplace_back("abstract");
  if (text::trim(contribution).empty()) empty.emplace_back("contribution");
  if (!empty.empty()) throw Error(ErrorKind::kUsage, "classifier input has empty fields: " + text::join(empty, ", "));
}

double entropy(const RatingDistribution& d) {
  double h = 0.0;
  for (double p : d.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double expected_rating(const RatingDistribution& d) {
  double e = 0.0;
  for (int r = 1; r <= kNumRatings; ++r) e += r * d[r];
  return e;
}

void validate_distribution(const RatingDistribution& d, double tolerance) {
  for (double p : d.probs) {
    if (!std::isfinite(p) || p < 0.0) throw Error(ErrorKind::kIntegrity, "invalid probability in distribution");
  }
  const double s = d.sum();
  if (std::abs(s - 1.0) > tolerance) {
    throw Error(ErrorKind::kIntegrity, "distribution sums to " + std::to_string(s) + ", expected 1");
  }
}

ScoredPrediction score(const ClassifierInput& input, ScoringBackend& backend) {
  input.validate();
  ScoredPrediction out;
  out.distribution = backend.predict(input);
  validate_distribution(out.distribution);
  out.entropy = entropy(out.distribution);
  out.expected_rating = expected_rating(out.distribution);
  return out;
}

// ---------------------------------------------------------------------------

RemoteScorer::RemoteScorer(std::string url, std::shared_ptr<gateway::Transport> transport, gateway::RetryPolicy retry,
                           std::chrono::milliseconds timeout, std::function<void(std::chrono::milliseconds)> sleep)
    : url_(std::move(url)), poster_(std::move(transport), retry, timeout, 0, std::move(sleep)) {
  if (url_.empty()) throw Error(ErrorKind::kUsage, "remote scorer URL not configured");
}

RatingDistribution RemoteScorer::predict(const ClassifierInput& input) {
  const json body = {{"advice", input.advice}, {"abstract", input.abstract}, {"contribution", input.contribution}};
  const auto resp = poster_.post(url_, body.dump(), {{"Content-Type", "application/json"}});
  const json parsed = json::parse(resp.body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("probs") || !parsed["probs"].is_array() ||
      parsed["probs"].size() != static_cast<std::size_t>(kNumRatings)) {
    throw Error(ErrorKind::kIntegrity, "scorer response must contain probs[10]");
  }
  RatingDistribution d;
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    if (!parsed["probs"][i].is_number()) throw Error(ErrorKind::kIntegrity, "scorer probs must be numbers");
    d.probs[i] = parsed["probs"][i].get<double>();
  }
  validate_distribution(d);
  return d;
}

// ---------------------------------------------------------------------------

namespace {

void add_field(std::vector<double>& x, std::string_view field, std::string_view prefix) {
  for (const auto& tok : text::split_whitespace(field)) {
    std::string w;
    for (char c : tok) {
      if (std::isalnum(static_cast<unsigned char>(c))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (w.empty()) continue;
    const std::uint64_t h = text::fnv1a64(w, text::fnv1a64(prefix));
    x[h % x.size()] += ((h >> 63) != 0U) ? -1.0 : 1.0;
  }
}

}  // namespace

std::vector<double> featurize(const ClassifierInput& input, std::size_t dim) {
  if (dim == 0) throw Error(ErrorKind::kUsage, "feature dimension must be positive");
  std::vector<double> x(dim, 0.0);
  add_field(x, input.advice, "advice");
  add_field(x, input.abstract, "abstract");
  add_field(x, input.contribution, "contribution");
  const double n = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
  if (n > 0.0) {
    for (double& v : x) v /= n;
  }
  return x;
}

ReferenceScorer::ReferenceScorer(std::size_t dim) : dim_(dim), weights_(kNumRatings * dim, 0.0) {
  if (dim == 0) throw Error(ErrorKind::kUsage, "feature dimension must be positive");
}

ReferenceScorer ReferenceScorer::seeded(std::size_t dim, std::uint64_t seed) {
  ReferenceScorer s(dim);
  Rng rng(seed);
  for (double& w : s.weights_) w = 2.0 * (rng.uniform() - 0.5);
  return s;
}

RatingDistribution ReferenceScorer::predict_features(const std::vector<double>& x) const {
  std::array<double, kNumRatings> logits{};
  for (std::size_t c = 0; c < kNumRatings; ++c) {
    const double* w = weights_.data() + c * dim_;
    logits[c] = bias_[c] + std::inner_product(x.begin(), x.end(), w, 0.0);
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  RatingDistribution d;
  double z = 0.0;
  for (std::size_t c = 0; c < kNumRatings; ++c) z += d.probs[c] = std::exp(logits[c] - mx);
  for (double& p : d.probs) p /= z;
  return d;
}

RatingDistribution ReferenceScorer::predict(const ClassifierInput& input) {
  return predict_features(featurize(input, dim_));
}

double ReferenceScorer::fit(const std::vector<TrainingExample>& examples, const FitOptions& options) {
  if (examples.empty()) throw Error(ErrorKind::kUsage, "fit: no training examples");
  std::vector<std::vector<double>> xs;
  xs.reserve(examples.size());
  for (const auto& e : examples) {
    validate_distribution(e.target);
    xs.push_back(featurize(e.input, dim_));
  }
  Rng rng(options.seed);
  double loss = 0.0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto order = rng.sample_without_replacement(examples.size(), examples.size());
    loss = 0.0;
    for (std::size_t i : order) {
      const auto p = predict_features(xs[i]);
      const auto& t = examples[i].target;
      for (std::size_t c = 0; c < kNumRatings; ++c) {
        if (t.probs[c] > 0.0) loss -= t.probs[c] * std::log(std::max(p.probs[c], 1e-300));
        const double g = p.probs[c] - t.probs[c];
        double* w = weights_.data() + c * dim_;
        for (std::size_t k = 0; k < dim_; ++k) {
          w[k] -= options.learning_rate * (g * xs[i][k] + options.l2 * w[k]);
        }
        bias_[c] -= options.learning_rate * g;
      }
    }
    loss /= static_cast<double>(examples.size());
    spdlog::debug("fit epoch {}: mean cross-entropy {:.4f}", epoch + 1, loss);
  }
  return loss;
}

void ReferenceScorer::save(const std::string& path) const {
  std::ostringstream out;
  out << std::setprecision(17) << "hashed-bow-logreg " << kNumRatings << ' ' << dim_ << '\n';
  for (std::size_t c = 0; c < kNumRatings; ++c) {
    for (std::size_t k = 0; k < dim_; ++k) out << (k ? " " : "") << weights_[c * dim_ + k];
    out << '\n';
  }
  for (std::size_t c = 0; c < kNumRatings; ++c) out << (c ? " " : "") << bias_[c];
  out << '\n';
  write_text_file(path, out.str());
}

ReferenceScorer ReferenceScorer::load(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string tag;
  std::size_t classes = 0;
  std::size_t dim = 0;
  if (!(in >> tag >> classes >> dim) || tag != "hashed-bow-logreg" || classes != kNumRatings || dim == 0) {
    throw Error(ErrorKind::kIntegrity, path + ": not a scorer weights file");
  }
  ReferenceScorer s(dim);
  for (double& w : s.weights_) {
    if (!(in >> w)) throw Error(ErrorKind::kIntegrity, path + ": truncated weights");
  }
  for (double& b : s.bias_) {
    if (!(in >> b)) throw Error(ErrorKind::kIntegrity, path + ": truncated biases");
  }
  return s;
}

}  // namespace hypadv::classifier

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypadv/advisor.hpp"
#include "hypadv/classifier.hpp"
#include "hypadv/corpus.hpp"
#include "hypadv/gateway.hpp"
#include "hypadv/reward.hpp"
#include "hypadv/vector_index.hpp"

namespace hypadv::raft {

struct RaftConfig {
  std::size_t candidates_per_hypothesis = 16;  // K
  std::size_t top_k = 1;
  std::size_t papers_per_iteration = 1000;
  std::size_t iterations = 4;
  gateway::DecodingParams decoding{0.7, 0.8, 1.05, 4096};
  double alpha = 0.4;
  double lambda = 0.7;
  std::uint64_t seed = 0;
  std::size_t workers = 8;
  advisor::RetrievalConfig retrieval;
  advisor::AssembleOptions assemble;
  std::string config_hash;  // copied into every output row when non-empty

  void validate() const;
};

struct IterationReport {
  std::size_t iteration = 0;
  std::string model_ref;
  std::size_t hypotheses_sampled = 0;
  std::size_t hypotheses_processed = 0;
  std::size_t skipped_no_reviews = 0;
  std::size_t skipped_invalid = 0;  // missing fields or failed context assembly
  std::size_t failed_generation = 0;  // every candidate failed
  std::size_t candidates_scored = 0;
  std::size_t candidate_failures = 0;
  double mean_reward_all = 0.0;
  double mean_reward_selected = 0.0;
  double best_reward = 0.0;
  std::size_t sft_rows = 0;
};

ordered_json report_to_json(const IterationReport& r);

// Reference text for ROUGE: every review of the paper, joined by blank lines.
std::string review_reference(const corpus::PaperRecord& p);

// Scores one candidate against the paper's reviews.
reward::RewardBreakdown score_candidate(const advisor::StructuredAdvice& advice, const corpus::PaperRecord& paper,
                                        classifier::ScoringBackend& scorer, double alpha, double lambda);

struct IterationPaths {
  std::string sft;
  std::string candidates;
};

// Samples papers, generates K candidates each with `model_ref` as the
// generator, scores them and keeps the top_k per paper. Output rows follow
// the sampling order, so reruns with the same seed are byte-identical.
IterationReport run_iteration(const corpus::CorpusStore& store, const index::IndexSet& indexes,
                              gateway::LlmBackend& generator, classifier::ScoringBackend& scorer,
                              const RaftConfig& config, std::size_t iteration, const std::string& model_ref,
                              const IterationPaths& paths);

// ---------------------------------------------------------------------------
// Warm-up distillation from a teacher model.

struct WarmupConfig {
  std::size_t sample_size = 4000;
  std::uint64_t seed = 0;
  std::size_t workers = 8;
  double max_failure_rate = 0.2;
  advisor::AdviseConfig advise;
  std::string config_hash;
};

struct WarmupReport {
  std::size_t sampled = 0;
  std::size_t written = 0;
  std::size_t failures = 0;
};

// Throws Error(kAdvising) when more than `max_failure_rate` of the sample
// fails; nothing is written in that case.
WarmupReport distill_warmup(const corpus::CorpusStore& store, const index::IndexSet& indexes,
                            gateway::LlmBackend& teacher, const WarmupConfig& config, const std::string& out_path);

// ---------------------------------------------------------------------------
// Trainer boundary. The trainer reads an SFT dataset and a config file and
// writes manifest.json {model_ref, dataset_hash, steps, notes}.

struct TrainManifest {
  std::string model_ref;
  std::string dataset_hash;  // SHA-256 of the SFT file
  std::int64_t steps = 0;
  std::string notes;

  static TrainManifest from_json(const json& j);
  ordered_json to_json() const;
};

class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual TrainManifest train(const std::string& sft_path, const std::string& config_path,
                              const std::string& manifest_path) = 0;
};

// Runs `<command...> --sft <path> --config <path> --out <manifest>`.
class SubprocessTrainer final : public Trainer {
 public:
  explicit SubprocessTrainer(std::vector<std::string> command);
  TrainManifest train(const std::string& sft_path, const std::string& config_path,
                      const std::string& manifest_path) override;

 private:
  std::vector<std::string> command_;
};

// POST {sft_path, config_path, out_path}; the response body is the manifest.
class HttpTrainer final : public Trainer {
 public:
  HttpTrainer(std::string url, std::shared_ptr<gateway::Transport> transport);
  TrainManifest train(const std::string& sft_path, const std::string& config_path,
                      const std::string& manifest_path) override;

 private:
  std::string url_;
  std::shared_ptr<gateway::Transport> transport_;
};

// Reads and checks a manifest: model_ref must be non-empty and dataset_hash
// must match the SFT file. Throws Error(kTrainer).
TrainManifest read_manifest(const std::string& manifest_path, const std::string& sft_path);

struct LoopResult {
  std::vector<IterationReport> reports;
  std::vector<TrainManifest> manifests;
  std::optional<std::string> halted;  // reason, when the loop stopped early
};

// Iterations 1..config.iterations, each in <out_dir>/iter_<n>/ with
// sft.jsonl, candidates.jsonl, report.json and manifest.json. A trainer
// failure stops the loop and keeps every artifact written so far.
LoopResult run_loop(const corpus::CorpusStore& store, const index::IndexSet& indexes, gateway::LlmBackend& generator,
                    classifier::ScoringBackend& scorer, const RaftConfig& config, Trainer& trainer,
                    const std::string& initial_model_ref, const std::string& trainer_config_path,
                    const std::string& out_dir);

}  // namespace hypadv::raft

#include "hypadv/raft.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <spdlog/spdlog.h>

#include <cerrno>
#include <cstring>
#include <filesystem>

#include "hypadv/error.hpp"
#include "hypadv/parallel.hpp"
#include "hypadv/random.hpp"
#include "hypadv/text.hpp"

extern char** environ;

namespace hypadv::raft {

void RaftConfig::validate() const {
  if (candidates_per_hypothesis < 1) throw Error(ErrorKind::kUsage, "K must be >= 1");
  if (top_k < 1 || top_k > candidates_per_hypothesis) throw Error(ErrorKind::kUsage, "top_k must be in [1, K]");
  if (papers_per_iteration < 1) throw Error(ErrorKind::kUsage, "papers per iteration must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::kUsage, "alpha must be in [0,1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::kUsage, "lambda must be in [0,1]");
}

ordered_json report_to_json(const IterationReport& r) {
  ordered_json j;
  j["iteration"] = r.iteration;
  j["model_ref"] = r.model_ref;
  j["hypotheses_sampled"] = r.hypotheses_sampled;
  j["hypotheses_processed"] = r.hypotheses_processed;
  j["skipped_no_reviews"] = r.skipped_no_reviews;
  j["skipped_invalid"] = r.skipped_invalid;
  j["failed_generation"] = r.failed_generation;
  j["candidates_scored"] = r.candidates_scored;
  j["candidate_failures"] = r.candidate_failures;
  j["mean_reward_all"] = r.mean_reward_all;
  j["mean_reward_selected"] = r.mean_reward_selected;
  j["best_reward"] = r.best_reward;
  j["sft_rows"] = r.sft_rows;
  return j;
}

std::string review_reference(const corpus::PaperRecord& p) {
  std::vector<std::string> texts;
  for (const auto& r : p.reviews) texts.push_back(r.review_text);
  return text::join(texts, "\n\n");
}

reward::RewardBreakdown score_candidate(const advisor::StructuredAdvice& advice, const corpus::PaperRecord& paper,
                                        classifier::ScoringBackend& scorer, double alpha, double lambda) {
  const auto ratings = paper.ratings();
  const auto smoothed = reward::smooth(reward::empirical_distribution(ratings), alpha);
  const classifier::ClassifierInput in{advisor::serialize_advice(advice), paper.abstract, paper.contribution_text};
  const auto pred = classifier::score(in, scorer);
  const auto rouge = reward::rouge_scores(advisor::advice_plain_text(advice), review_reference(paper));
  return reward::combined_reward(reward::rating_reward(pred.distribution, smoothed), rouge, lambda);
}

namespace {

ordered_json reward_json(const reward::RewardBreakdown& b) {
  return {{"rating_reward", b.rating_reward}, {"rouge1", b.rouge1},       {"rouge2", b.rouge2},
          {"rougeL", b.rougeL},               {"text_reward", b.text_reward}, {"combined", b.combined},
          {"lambda", b.lambda}};
}

std::vector<std::size_t> sample_papers(std::size_t n, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  return rng.sample_without_replacement(n, std::min(count, n));
}

struct Candidate {
  std::optional<advisor::StructuredAdvice> advice;
  reward::RewardBreakdown reward;
  bool scored = false;
};

}  // namespace

IterationReport run_iteration(const corpus::CorpusStore& store, const index::IndexSet& indexes,
                              gateway::LlmBackend& generator, classifier::ScoringBackend& scorer,
                              const RaftConfig& config, std::size_t iteration, const std::string& model_ref,
                              const IterationPaths& paths) {
  config.validate();
  if (store.empty()) throw Error(ErrorKind::kUsage, "empty corpus");
  IterationReport report;
  report.iteration = iteration;
  report.model_ref = model_ref;

  const auto picks = sample_papers(store.size(), config.papers_per_iteration, text::mix64(config.seed, iteration));
  report.hypotheses_sampled = picks.size();
  std::vector<const corpus::PaperRecord*> papers;
  for (std::size_t i : picks) {
    const auto& p = store.records()[i];
    if (p.reviews.empty()) {
      ++report.skipped_no_reviews;
      spdlog::warn("raft: skipping {} (no reviews)", p.id);
      continue;
    }
    papers.push_back(&p);
  }

  const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, generator.max_in_flight()));
  std::vector<std::optional<advisor::AssembledContext>> contexts(papers.size());
  auto errs = parallel_for(papers.size(), workers, [&](std::size_t i) {
    const auto target = advisor::HypothesisInput::from_paper(*papers[i]);
    target.validate();
    const auto hits = advisor::retrieve(target, indexes, generator, config.retrieval);
    contexts[i] = advisor::assemble_context(target, hits, config.assemble);
  });
  for (std::size_t i = 0; i < errs.size(); ++i) {
    if (!errs[i]) continue;
    try {
      std::rethrow_exception(errs[i]);
    } catch (const std::exception& e) {
      spdlog::warn("raft: skipping {}: {}", papers[i]->id, e.what());
    }
  }

  const std::size_t K = config.candidates_per_hypothesis;
  std::vector<Candidate> cands(papers.size() * K);
  parallel_for(cands.size(), workers, [&](std::size_t t) {
    const std::size_t i = t / K;
    const std::size_t j = t % K;
    if (!contexts[i]) return;
    gateway::ChatRequest req;
    req.system_prompt = contexts[i]->system_prompt;
    req.user_prompt = contexts[i]->user_prompt;
    req.model_name = model_ref;
    req.seed = text::mix64(text::mix64(text::mix64(config.seed, text::fnv1a64(papers[i]->id)), iteration), j);
    config.decoding.apply(req);
    try {
      cands[t].advice = advisor::parse_advice(generator.chat_complete(req).text);
      cands[t].reward = score_candidate(*cands[t].advice, *papers[i], scorer, config.alpha, config.lambda);
      cands[t].scored = true;
    } catch (const Error& e) {
      spdlog::debug("raft: {} candidate {} failed: {}", papers[i]->id, j, e.what());
    }
  });

  JsonlWriter cand_out(paths.candidates);
  JsonlWriter sft_out(paths.sft);
  double sum_all = 0.0;
  double sum_selected = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < papers.size(); ++i) {
    if (!contexts[i]) {
      ++report.skipped_invalid;
      continue;
    }
    std::vector<std::size_t> valid;
    std::vector<double> combined;
    for (std::size_t j = 0; j < K; ++j) {
      if (cands[i * K + j].scored) {
        valid.push_back(j);
        combined.push_back(cands[i * K + j].reward.combined);
      } else {
        ++report.candidate_failures;
      }
    }
    if (valid.empty()) {
      ++report.failed_generation;
      spdlog::warn("raft: every candidate failed for {}", papers[i]->id);
      continue;
    }
    ++report.hypotheses_processed;
    std::vector<char> selected(K, 0);
    const auto top = reward::select_top_k(combined, config.top_k);
    for (std::size_t r : top) selected[valid[r]] = 1;
    for (std::size_t v = 0; v < valid.size(); ++v) {
      const auto& c = cands[i * K + valid[v]];
      ordered_json row;
      row["paper_id"] = papers[i]->id;
      row["iteration"] = iteration;
      row["candidate_index"] = valid[v];
      row["advice"] = advisor::advice_to_json(*c.advice);
      row["reward"] = reward_json(c.reward);
      row["selected"] = selected[valid[v]] != 0;
      if (!config.config_hash.empty()) row["config_hash"] = config.config_hash;
      row["seed"] = config.seed;
      cand_out.write(row);
      sum_all += c.reward.combined;
      report.best_reward = any ? std::max(report.best_reward, c.reward.combined) : c.reward.combined;
      any = true;
      ++report.candidates_scored;
    }
    for (std::size_t r : top) {
      const auto& c = cands[i * K + valid[r]];
      ordered_json row;
      row["input"] = contexts[i]->user_prompt;
      row["output"] = advisor::serialize_advice(*c.advice);
      row["paper_id"] = papers[i]->id;
      row["iteration"] = iteration;
      row["reward"] = reward_json(c.reward);
      if (!config.config_hash.empty()) row["config_hash"] = config.config_hash;
      row["seed"] = config.seed;
      sft_out.write(row);
      sum_selected += c.reward.combined;
      ++report.sft_rows;
    }
  }
  cand_out.commit();
  sft_out.commit();
  if (report.candidates_scored) report.mean_reward_all = sum_all / static_cast<double>(report.candidates_scored);
  if (report.sft_rows) report.mean_reward_selected = sum_selected / static_cast<double>(report.sft_rows);
  spdlog::info("raft iteration {}: {} hypotheses, {} candidates, mean reward {:.4f} -> selected {:.4f}", iteration,
               report.hypotheses_processed, report.candidates_scored, report.mean_reward_all,
               report.mean_reward_selected);
  return report;
}

// ---------------------------------------------------------------------------

WarmupReport distill_warmup(const corpus::CorpusStore& store, const index::IndexSet& indexes,
                            gateway::LlmBackend& teacher, const WarmupConfig& config, const std::string& out_path) {
  if (store.empty()) throw Error(ErrorKind::kUsage, "empty corpus");
  const auto picks = sample_papers(store.size(), config.sample_size, config.seed);
  WarmupReport report;
  report.sampled = picks.size();
  if (picks.empty()) {
    spdlog::warn("distill: sample size 0, writing an empty dataset");
    JsonlWriter out(out_path);
    out.commit();
    return report;
  }
  std::vector<std::optional<advisor::AdviceResult>> results(picks.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, teacher.max_in_flight()));
  const auto errs = parallel_for(picks.size(), workers, [&](std::size_t i) {
    const auto& p = store.records()[picks[i]];
    auto cfg = config.advise;
    cfg.seed = text::mix64(config.seed, text::fnv1a64(p.id));
    results[i] = advisor::advise(advisor::HypothesisInput::from_paper(p), indexes, teacher, cfg);
  });
  for (std::size_t i = 0; i < errs.size(); ++i) {
    if (!errs[i]) continue;
    ++report.failures;
    try {
      std::rethrow_exception(errs[i]);
    } catch (const std::exception& e) {
      spdlog::warn("distill: {} failed: {}", store.records()[picks[i]].id, e.what());
    }
  }
  const double rate = static_cast<double>(report.failures) / static_cast<double>(picks.size());
  if (rate > config.max_failure_rate) {
    throw Error(ErrorKind::kAdvising, "distillation failed for " + std::to_string(report.failures) + " of " +
                                          std::to_string(picks.size()) + " papers");
  }
  JsonlWriter out(out_path);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    if (!results[i]) continue;
    ordered_json row;
    row["input"] = results[i]->transcript.context.user_prompt;
    row["output"] = advisor::serialize_advice(results[i]->advice);
    row["paper_id"] = store.records()[picks[i]].id;
    row["iteration"] = 0;
    row["reward"] = nullptr;
    if (!config.config_hash.empty()) row["config_hash"] = config.config_hash;
    row["seed"] = config.seed;
    out.write(row);
  }
  report.written = out.rows();
  out.commit();
  return report;
}

// ---------------------------------------------------------------------------

TrainManifest TrainManifest::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kTrainer, "manifest is not a JSON object");
  TrainManifest m;
  try {
    m.model_ref = j.at("model_ref").get<std::string>();
    m.dataset_hash = j.at("dataset_hash").get<std::string>();
    m.steps = j.value("steps", std::int64_t{0});
    m.notes = j.value("notes", std::string());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kTrainer, std::string("manifest: ") + e.what());
  }
  return m;
}

ordered_json TrainManifest::to_json() const {
  return {{"model_ref", model_ref}, {"dataset_hash", dataset_hash}, {"steps", steps}, {"notes", notes}};
}

TrainManifest read_manifest(const std::string& manifest_path, const std::string& sft_path) {
  if (!std::filesystem::exists(manifest_path)) throw Error(ErrorKind::kTrainer, "trainer wrote no manifest");
  const json j = json::parse(read_text_file(manifest_path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::kTrainer, "manifest is not valid JSON");
  auto m = TrainManifest::from_json(j);
  if (m.model_ref.empty()) throw Error(ErrorKind::kTrainer, "manifest has an empty model_ref");
  const auto expected = text::sha256_file_hex(sft_path);
  if (m.dataset_hash != expected) {
    throw Error(ErrorKind::kTrainer, "manifest dataset_hash " + m.dataset_hash + " does not match " + expected);
  }
  return m;
}

SubprocessTrainer::SubprocessTrainer(std::vector<std::string> command) : command_(std::move(command)) {
  if (command_.empty()) throw Error(ErrorKind::kUsage, "trainer command not configured");
}

TrainManifest SubprocessTrainer::train(const std::string& sft_path, const std::string& config_path,
                                       const std::string& manifest_path) {
  std::vector<std::string> args = command_;
  for (const std::string& a : {std::string("--sft"), sft_path, std::string("--config"), config_path,
                               std::string("--out"), manifest_path}) {
    args.push_back(a);
  }
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::filesystem::remove(manifest_path);
  spdlog::info("trainer: {}", text::join(args, " "));
  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
  if (rc != 0) throw Error(ErrorKind::kTrainer, "cannot start trainer " + args[0] + ": " + std::strerror(rc));
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw Error(ErrorKind::kTrainer, std::string("waitpid: ") + std::strerror(errno));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error(ErrorKind::kTrainer, "trainer exited with status " +
                                         std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  return read_manifest(manifest_path, sft_path);
}

HttpTrainer::HttpTrainer(std::string url, std::shared_ptr<gateway::Transport> transport)
    : url_(std::move(url)), transport_(std::move(transport)) {
  if (url_.empty()) throw Error(ErrorKind::kUsage, "trainer URL not configured");
}

TrainManifest HttpTrainer::train(const std::string& sft_path, const std::string& config_path,
                                 const std::string& manifest_path) {
  const json body = {{"sft_path", sft_path}, {"config_path", config_path}, {"out_path", manifest_path}};
  // Training runs for hours; the call is not retried and has no short timeout.
  const auto resp = transport_->post(url_, body.dump(), {{"Content-Type", "application/json"}},
                                     std::chrono::hours(48));
  if (resp.status < 200 || resp.status >= 300) {
    throw Error(ErrorKind::kTrainer, "trainer returned HTTP " + std::to_string(resp.status));
  }
  const json j = json::parse(resp.body, nullptr, false);
  write_text_file(manifest_path, TrainManifest::from_json(j).to_json().dump(2) + "\n");
  return read_manifest(manifest_path, sft_path);
}

LoopResult run_loop(const corpus::CorpusStore& store, const index::IndexSet& indexes, gateway::LlmBackend& generator,
                    classifier::ScoringBackend& scorer, const RaftConfig& config, Trainer& trainer,
                    const std::string& initial_model_ref, const std::string& trainer_config_path,
                    const std::string& out_dir) {
  LoopResult result;
  std::string model_ref = initial_model_ref;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const auto dir = std::filesystem::path(out_dir) / ("iter_" + std::to_string(it));
    std::filesystem::create_directories(dir);
    const IterationPaths paths{(dir / "sft.jsonl").string(), (dir / "candidates.jsonl").string()};
    auto report = run_iteration(store, indexes, generator, scorer, config, it, model_ref, paths);
    write_text_file((dir / "report.json").string(), report_to_json(report).dump(2) + "\n");
    result.reports.push_back(report);
    if (report.sft_rows == 0) {
      result.halted = "iteration " + std::to_string(it) + " produced no SFT rows";
      break;
    }
    try {
      auto manifest = trainer.train(paths.sft, trainer_config_path, (dir / "manifest.json").string());
      spdlog::info("raft iteration {}: trained {} ({} steps)", it, manifest.model_ref, manifest.steps);
      model_ref = manifest.model_ref;
      result.manifests.push_back(std::move(manifest));
    } catch (const Error& e) {
      result.halted = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
  }
  if (result.halted) spdlog::error("raft loop halted: {}", *result.halted);
  return result;
}

}  // namespace hypadv::raft

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>

#include "hypadv/advisor.hpp"
#include "hypadv/classifier.hpp"
#include "hypadv/config.hpp"
#include "hypadv/corpus.hpp"
#include "hypadv/error.hpp"
#include "hypadv/evolver.hpp"
#include "hypadv/gateway.hpp"
#include "hypadv/metrics.hpp"
#include "hypadv/parallel.hpp"
#include "hypadv/prompts.hpp"
#include "hypadv/raft.hpp"
#include "hypadv/summarizer.hpp"
#include "hypadv/text.hpp"
#include "hypadv/vector_index.hpp"

namespace fs = std::filesystem;
using namespace hypadv;

namespace {

struct Globals {
  std::string config_file;
  std::vector<std::string> sets;
  std::string backend;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool verbose = false;
  bool quiet = false;
};

// Loaded per subcommand after flag parsing.
struct Context {
  json effective;
  config::RunConfig cfg;
  std::string hash;
};

Context load_context(const Globals& g, std::vector<json> patches) {
  if (!g.backend.empty()) patches.insert(patches.begin(), json{{"backend", g.backend}});
  if (g.seed) patches.insert(patches.begin(), json{{"seed", *g.seed}});
  if (g.workers) patches.insert(patches.begin(), json{{"workers", *g.workers}});
  for (const auto& s : g.sets) patches.push_back(config::assignment_patch(s));
  Context c;
  std::optional<std::string> file;
  if (!g.config_file.empty()) file = g.config_file;
  c.effective = config::layer(file, config::env_patch_from_process(), patches);
  c.cfg = config::from_json(c.effective);
  c.hash = config::config_hash(c.effective);
  spdlog::debug("config hash {}", c.hash);
  return c;
}

std::string path_or(const std::string& flag, const Context& c, const std::string& key, bool required) {
  if (!flag.empty()) return flag;
  if (auto it = c.cfg.paths.find(key); it != c.cfg.paths.end() && !it->second.empty()) return it->second;
  if (required) throw Error(ErrorKind::kUsage, "missing path: --" + key + " (or paths." + key + " in config)");
  return {};
}

gateway::RetryPolicy retry_policy(const config::RunConfig& cfg) {
  return {cfg.endpoint.max_attempts, std::chrono::milliseconds(cfg.endpoint.base_delay_ms),
          std::chrono::milliseconds(cfg.endpoint.max_delay_ms)};
}

void load_fixtures(gateway::MockBackend& mock, const std::string& path) {
  for (const auto& row : read_jsonl(path)) {
    std::string key = row.value("key", std::string());
    if (key.empty()) {
      gateway::ChatRequest r;
      r.system_prompt = row.at("system").get<std::string>();
      r.user_prompt = row.at("user").get<std::string>();
      key = gateway::MockBackend::prompt_key(r);
    }
    mock.add_fixture(key, row.at("completions").get<std::vector<std::string>>());
  }
}

std::unique_ptr<gateway::LlmBackend> make_backend(const Context& c) {
  if (c.cfg.backend == "mock") {
    auto mock = std::make_unique<gateway::MockBackend>(
        gateway::MockConfig{c.cfg.seed, c.cfg.mock_embedding_dim, "mock-embedding"});
    if (auto fx = path_or("", c, "fixtures", false); !fx.empty()) load_fixtures(*mock, fx);
    return mock;
  }
  if (c.cfg.backend == "http") {
    gateway::HttpBackendConfig h;
    h.base_url = c.cfg.endpoint.base_url;
    h.api_key_env = c.cfg.endpoint.api_key_env;
    h.embedding_model = c.cfg.models.embedding;
    h.timeout = std::chrono::milliseconds(c.cfg.endpoint.timeout_ms);
    h.retry = retry_policy(c.cfg);
    h.max_in_flight = c.cfg.endpoint.max_in_flight;
    h.embed_batch_cap = c.cfg.endpoint.embed_batch_cap;
    h.jitter_seed = c.cfg.seed;
    if (h.base_url.empty()) throw Error(ErrorKind::kUsage, "endpoint.base_url not configured");
    return std::make_unique<gateway::HttpBackend>(h, gateway::make_http_transport());
  }
  throw Error(ErrorKind::kUsage, "unknown backend: " + c.cfg.backend);
}

std::unique_ptr<classifier::ScoringBackend> make_scorer(const Context& c, const std::string& weights_flag) {
  if (c.cfg.scorer.backend == "remote") {
    return std::make_unique<classifier::RemoteScorer>(c.cfg.scorer.url, gateway::make_http_transport(),
                                                      retry_policy(c.cfg));
  }
  if (c.cfg.scorer.backend != "reference") throw Error(ErrorKind::kUsage, "unknown scorer: " + c.cfg.scorer.backend);
  const auto weights = path_or(weights_flag, c, "scorer_weights", false);
  if (!weights.empty()) return std::make_unique<classifier::ReferenceScorer>(classifier::ReferenceScorer::load(weights));
  spdlog::warn("no scorer weights given; using untrained seeded weights");
  return std::make_unique<classifier::ReferenceScorer>(
      classifier::ReferenceScorer::seeded(c.cfg.scorer.feature_dim, c.cfg.seed));
}

std::int64_t build_timestamp(const config::RunConfig& cfg) {
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) return std::strtoll(sde, nullptr, 10);
  if (cfg.backend == "mock") return 0;
  return static_cast<std::int64_t>(std::time(nullptr));
}

corpus::CorpusStore load_store(const std::string& path) {
  corpus::IngestReport report;
  auto store = corpus::CorpusStore::from_file(path, &report);
  if (!report.rejections.empty()) spdlog::warn("{}: {} lines rejected", path, report.rejections.size());
  if (store.empty()) throw Error(ErrorKind::kIntegrity, path + ": no valid records");
  return store;
}

index::IndexSet load_or_build_indexes(const std::string& dir, const corpus::CorpusStore& store,
                                      gateway::LlmBackend& backend, const Context& c) {
  if (!dir.empty() && fs::exists(dir)) return index::IndexSet::load(dir);
  spdlog::info("building indexes in memory from {} papers", store.size());
  return index::IndexSet::build(store, backend, build_timestamp(c.cfg));
}

advisor::AssembleOptions assemble_options(const Context& c, const corpus::CorpusStore* store) {
  advisor::AssembleOptions a;
  a.rubrics = advisor::RubricConfig::parse(c.cfg.rubrics);
  a.context_budget = c.cfg.context_budget;
  if (store) {
    a.title_of = [store](const std::string& id) {
      const auto* p = store->find(id);
      return p ? p->title : id;
    };
  }
  return a;
}

advisor::RetrievalConfig retrieval_config(const Context& c) {
  advisor::RetrievalConfig r;
  r.k = c.cfg.retrieval_k;
  r.contamination_guard = c.cfg.contamination_guard;
  return r;
}

raft::RaftConfig raft_config(const Context& c, const corpus::CorpusStore& store) {
  raft::RaftConfig r;
  r.candidates_per_hypothesis = c.cfg.raft_k;
  r.top_k = c.cfg.raft_top_k;
  r.papers_per_iteration = c.cfg.papers_per_iteration;
  r.iterations = c.cfg.raft_iterations;
  r.decoding = c.cfg.raft_decoding;
  r.alpha = c.cfg.alpha;
  r.lambda = c.cfg.lambda;
  r.seed = c.cfg.seed;
  r.workers = c.cfg.workers;
  r.retrieval = retrieval_config(c);
  r.assemble = assemble_options(c, &store);
  r.config_hash = c.hash;
  return r;
}

summarizer::LlmCallConfig call_config(const std::string& model, const gateway::DecodingParams& d, const Context& c) {
  return {model, d, c.cfg.repair_retries, c.cfg.seed};
}

std::string prompt_or_asset(const std::string& path, const char* asset) {
  return path.empty() ? std::string(prompts::asset(asset)) : read_text_file(path);
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

fs::path fulltext_location(const corpus::PaperRecord& p, const std::string& papers_path) {
  fs::path f(*p.fulltext_path);
  if (f.is_relative()) f = fs::path(papers_path).parent_path() / f;
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented advisor for research hypotheses"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.sets, "Config override key.path=value (repeatable)");
  app.add_option("--backend", g.backend, "mock | http");
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--workers", g.workers, "Concurrent requests");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");
  app.add_flag("-q,--quiet", g.quiet, "Errors only");

  std::function<int()> run;
  std::vector<json> patches;

  // ingest
  std::string papers;
  std::string out;
  auto* ingest = app.add_subcommand("ingest", "Validate papers.jsonl and report rejections");
  ingest->add_option("--papers", papers, "Input papers.jsonl");
  ingest->add_option("--out", out, "Write the normalized store here");
  ingest->callback([&] {
    run = [&] {
      auto c = load_context(g, patches);
      const auto path = path_or(papers, c, "papers", true);
      corpus::CorpusStore store;
      const auto report = store.ingest(path);
      ordered_json j;
      j["lines"] = report.lines;
      j["accepted"] = report.accepted;
      j["unchanged"] = report.unchanged;
      j["rejected"] = ordered_json::array();
      for (const auto& r : report.rejections) {
        j["rejected"].push_back({{"line", r.line_no}, {"id", r.id}, {"reason", r.reason}});
      }
      if (!out.empty()) store.write(out);
      print_json(j);
      return 0;
    };
  });

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("--papers", papers, "papers.jsonl");
  stats->callback([&] {
    run = [&] {
      auto c = load_context(g, patches);
      const auto store = load_store(path_or(papers, c, "papers", true));
      const auto s = corpus::corpus_stats(store);
      ordered_json j;
      j["paper_count"] = s.paper_count;
      j["labeled_count"] = s.labeled_count;
      j["accepted_count"] = s.accepted_count ? ordered_json(*s.accepted_count) : ordered_json(nullptr);
      j["acceptance_rate"] = s.acceptance_rate ? ordered_json(*s.acceptance_rate) : ordered_json(nullptr);
      j["mean_section_tokens"] = s.mean_section_tokens;
      std::vector<double> ratings;
      for (const auto& p : store.records()) {
        for (int r : p.ratings()) ratings.push_back(r);
      }
      if (!ratings.empty()) {
        const auto rs = metrics::rating_stats(ratings, 1.0);
        j["human_ratings"] = {{"count", rs.count},
                              {"mean", rs.mean},
                              {"variance", rs.variance ? ordered_json(*rs.variance) : ordered_json(nullptr)}};
      }
      print_json(j);
      return 0;
    };
  });

  // summarize
  std::string prompt_file;
  std::string extract_prompt_file;
  auto* summarize = app.add_subcommand("summarize", "Section summaries and contribution extraction from full text");
  summarize->add_option("--papers", papers, "papers.jsonl with fulltext_path");
  summarize->add_option("--out", out, "summaries.jsonl");
  summarize->add_option("--prompt", prompt_file, "Summarizer system prompt");
  summarize->add_option("--extract-prompt", extract_prompt_file, "Extraction prompt (e.g. an evolved one)");
  summarize->callback([&] {
    run = [&] {
      auto c = load_context(g, patches);
      const auto papers_path = path_or(papers, c, "papers", true);
      const auto out_path = path_or(out, c, "summaries", true);
      const auto store = load_store(papers_path);
      auto backend = make_backend(c);
      const auto sum_prompt = prompt_or_asset(prompt_file, "summarizer_system.txt");
      const auto ex_prompt = prompt_or_asset(extract_prompt_file, "extraction_default.txt");
      std::vector<std::optional<ordered_json>> rows(store.size());
      const auto errs = parallel_for(store.size(), std::min(c.cfg.workers, backend->max_in_flight()), [&](std::size_t i) {
        const auto& p = store.records()[i];
        if (!p.fulltext_path) return;
        const auto fulltext = read_text_file(fulltext_location(p, papers_path).string());
        auto sc = call_config(c.cfg.models.summarizer, c.cfg.summarize_decoding, c);
        sc.seed = text::mix64(c.cfg.seed, text::fnv1a64(p.id));
        auto ec = call_config(c.cfg.models.extractor, c.cfg.extract_decoding, c);
        ec.seed = sc.seed;
        const auto s = summarizer::summarize_sections(fulltext, sum_prompt, *backend, sc);
        const auto e = summarizer::extract_contribution(fulltext, ex_prompt, *backend, ec, c.cfg.self_consistency);
        ordered_json r;
        r["id"] = p.id;
        r["abstract_summary"] = s.abstract_summary;
        r["contribution_summary"] = s.contribution_summary;
        r["method_summary"] = s.method_summary;
        r["experiment_summary"] = s.experiment_summary;
        r["contribution_label"] = e.contribution_label;
        r["contribution_text"] = e.contribution_text;
        r["compression_ratio"] = s.compression_ratio;
        std::vector<std::string> warnings = s.warnings;
        warnings.insert(warnings.end(), e.warnings.begin(), e.warnings.end());
        r["warnings"] = warnings;
        r["config_hash"] = c.hash;
        rows[i] = std::move(r);
      });
      std::size_t failed = 0;
      std::size_t skipped = 0;
      JsonlWriter w(out_path);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (errs[i]) {
          ++failed;
          try {
            std::rethrow_exception(errs[i]);
          } catch (const std::exception& e) {
            spdlog::error("summarize {}: {}", store.records()[i].id, e.what());
          }
        } else if (rows[i]) {
          w.write(*rows[i]);
        } else {
          ++skipped;
          spdlog::debug("summarize {}: no fulltext_path", store.records()[i].id);
        }
      }
      w.commit();
      print_json({{"written", w.rows()}, {"failed", failed}, {"skipped", skipped}});
      return w.rows() == 0 && failed > 0 ? 1 : 0;
    };
  });

  // extract-contrib
  std::string fulltext_file;
  std::size_t samples = 0;
  auto* extract = app.add_subcommand("extract-contrib", "Extract the contribution statement of one paper");
  extract->add_option("--fulltext", fulltext_file, "Markdown full text")->required()->check(CLI::ExistingFile);
  extract->add_option("--prompt", prompt_file, "Extraction prompt file");
  extract->add_option("--samples", samples, "Self-consistency samples");
  extract->callback([&] {
    run = [&] {
      if (samples) patches.push_back({{"self_consistency", samples}});
      auto c = load_context(g, patches);
      auto backend = make_backend(c);
      const auto e = summarizer::extract_contribution(
          read_text_file(fulltext_file), prompt_or_asset(prompt_file, "extraction_default.txt"), *backend,
          call_config(c.cfg.models.extractor, c.cfg.extract_decoding, c), c.cfg.self_consistency);
      ordered_json j;
      j["contribution_label"] = e.contribution_label;
      j["contribution_text"] = e.contribution_text;
      j["verbatim_verified"] = e.verbatim_verified;
      j["agreeing_samples"] = e.agreeing_samples;
      j["samples"] = e.samples;
      j["warnings"] = e.warnings;
      print_json(j);
      return 0;
    };
  });

  // evolve-prompt
  std::string gold;
  std::string lineage;
  std::string best_out;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> top_k;
  auto* evolve = app.add_subcommand("evolve-prompt", "Evolve the contribution-extraction prompt on a gold set");
  evolve->add_option("--gold", gold, "Gold examples (jsonl)");
  evolve->add_option("--seed-prompt", prompt_file, "Initial prompt file");
  evolve->add_option("--iterations", iterations, "GA iterations");
  evolve->add_option("--top-k", top_k, "Parents per crossover");
  evolve->add_option("--lineage", lineage, "lineage.jsonl output");
  evolve->add_option("--best-out", best_out, "Write the best prompt text here");
  evolve->callback([&] {
    run = [&] {
      if (iterations) patches.push_back({{"ga_iterations", *iterations}});
      if (top_k) patches.push_back({{"ga_top_k", *top_k}});
      auto c = load_context(g, patches);
      const auto gold_set = evolver::load_gold(path_or(gold, c, "gold", true));
      auto backend = make_backend(c);
      evolver::EvolveConfig ec;
      ec.top_k = c.cfg.ga_top_k;
      ec.iterations = c.cfg.ga_iterations;
      ec.temperature = c.cfg.ga_temperature;
      ec.seed = c.cfg.seed;
      ec.crossover_model = c.cfg.models.crossover;
      ec.crossover_decoding = c.cfg.crossover_decoding;
      ec.fitness.thresholds = {c.cfg.levenshtein_threshold, c.cfg.lcs_threshold};
      if (c.cfg.lcs_unit == "tokens") {
        ec.fitness.unit = evolver::LcsUnit::kWhitespaceTokens;
      } else if (c.cfg.lcs_unit != "characters") {
        throw Error(ErrorKind::kUsage, "lcs_unit must be characters or tokens");
      }
      ec.fitness.call = call_config(c.cfg.models.extractor, c.cfg.extract_decoding, c);
      ec.fitness.workers = std::min(c.cfg.workers, backend->max_in_flight());
      evolver::FitnessCache cache;
      const auto result = evolver::evolve(prompt_or_asset(prompt_file, "extraction_seed.txt"), gold_set, *backend,
                                          *backend, ec, &cache);
      if (const auto lp = path_or(lineage, c, "lineage", false); !lp.empty()) evolver::write_lineage(lp, result.lineage);
      if (!best_out.empty()) write_text_file(best_out, result.best.prompt_text + "\n");
      print_json({{"best_id", result.best.id},
                  {"best_fitness", *result.best.fitness},
                  {"genomes", result.lineage.size()},
                  {"skipped_iterations", result.skipped_iterations},
                  {"best_so_far", result.best_so_far}});
      return 0;
    };
  });

  // index
  std::string out_dir;
  auto* index_cmd = app.add_subcommand("index", "Build the four section indexes");
  index_cmd->add_option("--papers", papers, "papers.jsonl");
  index_cmd->add_option("--out-dir", out_dir, "Index directory");
  index_cmd->callback([&] {
    run = [&] {
      auto c = load_context(g, patches);
      const auto store = load_store(path_or(papers, c, "papers", true));
      const auto dir = path_or(out_dir, c, "index_dir", true);
      auto backend = make_backend(c);
      const auto set = index::IndexSet::build(store, *backend, build_timestamp(c.cfg));
      set.save(dir);
      ordered_json j;
      for (const auto& i : set.indexes) {
        j[std::string(corpus::section_name(i.section()))] = {{"entries", i.size()}, {"dimension", i.dimension()}};
      }
      print_json(j);
      return 0;
    };
  });

  // advise
  std::string index_dir;
  std::vector<std::string> ids;
  std::string hypothesis_file;
  std::string transcripts;
  std::optional<std::size_t> k;
  std::string rubrics;
  bool published_before = false;
  auto* advise = app.add_subcommand("advise", "Generate structured advice for hypotheses");
  advise->add_option("--papers", papers, "Corpus (retrieval titles, targets by --id)");
  advise->add_option("--id", ids, "Target paper ids (default: every paper)");
  advise->add_option("--hypothesis", hypothesis_file, "Single hypothesis JSON instead of corpus targets");
  advise->add_option("--index-dir", index_dir, "Index directory (built in memory when absent)");
  advise->add_option("--k", k, "Retrieved entries per section");
  advise->add_option("--rubrics", rubrics, "Comma list of novelty,significance,soundness or none");
  advise->add_flag("--published-before", published_before, "Retrieve only papers from earlier venue years");
  advise->add_option("--out", out, "advice.jsonl");
  advise->add_option("--transcripts", transcripts, "Directory for per-target transcripts");
  advise->callback([&] {
    run = [&] {
      if (k) patches.push_back({{"retrieval_k", *k}});
      if (!rubrics.empty()) patches.push_back({{"rubrics", rubrics}});
      auto c = load_context(g, patches);
      const auto store = load_store(path_or(papers, c, "papers", true));
      auto backend = make_backend(c);
      const auto indexes = load_or_build_indexes(path_or(index_dir, c, "index_dir", false), store, *backend, c);
      std::vector<advisor::HypothesisInput> targets;
      std::vector<int> years;
      if (!hypothesis_file.empty()) {
        const json h = json::parse(read_text_file(hypothesis_file));
        targets.push_back({h.value("id", std::string()), h.value("title", std::string()),
                           h.value("abstract", std::string()), h.value("contribution", std::string()),
                           h.value("method", std::string()), h.value("experiment", std::string())});
        years.push_back(h.value("venue_year", 0));
      } else if (!ids.empty()) {
        for (const auto& id : ids) {
          targets.push_back(advisor::HypothesisInput::from_paper(store.at(id)));
          years.push_back(store.at(id).venue_year);
        }
      } else {
        for (const auto& p : store.records()) {
          targets.push_back(advisor::HypothesisInput::from_paper(p));
          years.push_back(p.venue_year);
        }
      }
      const auto out_path = path_or(out, c, "advice", true);
      const auto tdir = path_or(transcripts, c, "transcripts", false);
      if (!tdir.empty()) fs::create_directories(tdir);
      std::vector<std::optional<ordered_json>> rows(targets.size());
      const auto errs = parallel_for(targets.size(), std::min(c.cfg.workers, backend->max_in_flight()), [&](std::size_t i) {
        advisor::AdviseConfig ac;
        ac.retrieval = retrieval_config(c);
        if (published_before && years[i] > 0) {
          const int year = years[i];
          ac.retrieval.admit = [&store, year](const std::string& id) {
            const auto* p = store.find(id);
            return p && p->venue_year < year;
          };
        }
        ac.assemble = assemble_options(c, &store);
        ac.decoding = c.cfg.advise_decoding;
        ac.model_name = c.cfg.models.advisor;
        ac.repair_retries = c.cfg.repair_retries;
        ac.seed = text::mix64(c.cfg.seed, text::fnv1a64(targets[i].paper_id + targets[i].title));
        const std::string name = targets[i].paper_id.empty() ? "target-" + std::to_string(i) : targets[i].paper_id;
        try {
          auto res = advisor::advise(targets[i], indexes, *backend, ac);
          if (!tdir.empty()) {
            write_text_file((fs::path(tdir) / (name + ".json")).string(),
                            advisor::transcript_to_json(res.transcript).dump(2) + "\n");
          }
          ordered_json r;
          r["paper_id"] = targets[i].paper_id;
          r["advice"] = advisor::advice_to_json(res.advice);
          r["config_hash"] = c.hash;
          r["seed"] = ac.seed;
          rows[i] = std::move(r);
        } catch (const advisor::AdvisingError& e) {
          if (!tdir.empty()) {
            write_text_file((fs::path(tdir) / (name + ".failed.json")).string(),
                            advisor::transcript_to_json(e.transcript()).dump(2) + "\n");
          }
          throw;
        }
      });
      std::size_t failed = 0;
      JsonlWriter w(out_path);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i]) {
          w.write(*rows[i]);
          continue;
        }
        ++failed;
        try {
          std::rethrow_exception(errs[i]);
        } catch (const std::exception& e) {
          spdlog::error("advise {}: {}", targets[i].paper_id, e.what());
        }
      }
      w.commit();
      print_json({{"written", w.rows()}, {"failed", failed}});
      return failed > 0 ? 1 : 0;
    };
  });

  // distill
  std::optional<std::size_t> sample_size;
  auto* distill = app.add_subcommand("distill", "Warm-up SFT data from a teacher model");
  distill->add_option("--papers", papers, "papers.jsonl");
  distill->add_option("--index-dir", index_dir, "Index directory");
  distill->add_option("--sample-size", sample_size, "Papers to sample");
  distill->add_option("--out", out, "Warm-up sft.jsonl");
  distill->callback([&] {
    run = [&] {
      if (sample_size) patches.push_back({{"warmup_sample", *sample_size}});
      auto c = load_context(g, patches);
      const auto store = load_store(path_or(papers, c, "papers", true));
      auto backend = make_backend(c);
      const auto indexes = load_or_build_indexes(path_or(index_dir, c, "index_dir", false), store, *backend, c);
      raft::WarmupConfig wc;
      wc.sample_size = c.cfg.warmup_sample;
      wc.seed = c.cfg.seed;
      wc.workers = c.cfg.workers;
      wc.advise.retrieval = retrieval_config(c);
      wc.advise.assemble = assemble_options(c, &store);
      wc.advise.decoding = c.cfg.advise_decoding;
      wc.advise.model_name = c.cfg.models.teacher;
      wc.advise.repair_retries = c.cfg.repair_retries;
      wc.config_hash = c.hash;
      const auto r = raft::distill_warmup(store, indexes, *backend, wc, path_or(out, c, "warmup", true));
      print_json({{"sampled", r.sampled}, {"written", r.written}, {"failures", r.failures}});
      return 0;
    };
  });

  // raft-iterate
  std::size_t iteration = 1;
  std::string model_ref;
  std::string weights;
  auto* raft_it = app.add_subcommand("raft-iterate", "One best-of-K generation and selection pass");
  raft_it->add_option("--papers", papers, "papers.jsonl");
  raft_it->add_option("--index-dir", index_dir, "Index directory (built in memory when absent)");
  raft_it->add_option("--out-dir", out_dir, "Directory for sft.jsonl, candidates.jsonl, report.json");
  raft_it->add_option("--iteration", iteration, "Iteration number (seeds the paper sample)");
  raft_it->add_option("--model-ref", model_ref, "Generator model (default: models.advisor)");
  raft_it->add_option("--scorer-weights", weights, "Reference scorer weights");
  raft_it->callback([&] {
    run = [&] {
      auto c = load_context(g, patches);
      const auto store = load_store(path_or(papers, c, "papers", true));
      const auto dir = path_or(out_dir, c, "out_dir", true);
      auto backend = make_backend(c);
      auto scorer = make_scorer(c, weights);
      const auto indexes = load_or_build_indexes(path_or(index_dir, c, "index_dir", false), store, *backend, c);
      fs::create_directories(dir);
      const auto rc = raft_config(c, store);
      const auto report = raft::run_iteration(store, indexes, *backend, *scorer, rc, iteration,
                                              model_ref.empty() ? c.cfg.models.advisor : model_ref,
                                              {(fs::path(dir) / "sft.jsonl").string(),
                                               (fs::path(dir) / "candidates.jsonl").string()});
      const auto j = raft::report_to_json(report);
      write_text_file((fs::path(dir) / "report.json").string(), j.dump(2) + "\n");
      print_json(j);
      return 0;
    };
  });

  // raft-loop
  std::string trainer_config;
  auto* raft_loop = app.add_subcommand("raft-loop", "Iterate generation, selection and training");
  raft_loop->add_option("--papers", papers, "papers.jsonl");
  raft_loop->add_option("--index-dir", index_dir, "Index directory (built in memory when absent)");
  raft_loop->add_option("--out-dir", out_dir, "Run directory");
  raft_loop->add_option("--trainer-config", trainer_config, "Config file handed to the trainer");
  raft_loop->add_option("--iterations", iterations, "RAFT iterations");
  raft_loop->add_option("--scorer-weights", weights, "Reference scorer weights");
  raft_loop->callback([&] {
    run = [&] {
      if (iterations) patches.push_back({{"raft_iterations", *iterations}});
      auto c = load_context(g, patches);
      const auto store = load_store(path_or(papers, c, "papers", true));
      const auto dir = path_or(out_dir, c, "out_dir", true);
      const auto tcfg = path_or(trainer_config, c, "trainer_config", true);
      auto backend = make_backend(c);
      auto scorer = make_scorer(c, weights);
      const auto indexes = load_or_build_indexes(path_or(index_dir, c, "index_dir", false), store, *backend, c);
      std::unique_ptr<raft::Trainer> trainer;
      if (!c.cfg.trainer.url.empty()) {
        trainer = std::make_unique<raft::HttpTrainer>(c.cfg.trainer.url, gateway::make_http_transport());
      } else {
        trainer = std::make_unique<raft::SubprocessTrainer>(c.cfg.trainer.command);
      }
      fs::create_directories(dir);
      const auto result = raft::run_loop(store, indexes, *backend, *scorer, raft_config(c, store), *trainer,
                                         c.cfg.models.advisor, tcfg, dir);
      ordered_json j;
      j["iterations"] = ordered_json::array();
      for (const auto& r : result.reports) j["iterations"].push_back(raft::report_to_json(r));
      j["model_refs"] = ordered_json::array();
      for (const auto& m : result.manifests) j["model_refs"].push_back(m.model_ref);
      j["halted"] = result.halted ? ordered_json(*result.halted) : ordered_json(nullptr);
      write_text_file((fs::path(dir) / "loop.json").string(), j.dump(2) + "\n");
      print_json(j);
      return result.halted ? 1 : 0;
    };
  });

  // score
  std::string advice_path;
  std::string train_weights;
  auto* score = app.add_subcommand("score", "Predict rating distributions for advice");
  score->add_option("--papers", papers, "papers.jsonl (abstract, contribution, labels)");
  score->add_option("--advice", advice_path, "advice.jsonl");
  score->add_option("--out", out, "predictions.jsonl");
  score->add_option("--scorer-weights", weights, "Reference scorer weights");
  score->add_option("--train-weights", train_weights,
                    "Fit the reference scorer on these rows' review ratings first and save the weights here");
  score->callback([&] {
    run = [&] {
      auto c = load_context(g, patches);
      const auto store = load_store(path_or(papers, c, "papers", true));
      const auto rows = read_jsonl(path_or(advice_path, c, "advice", true));
      std::vector<std::pair<const corpus::PaperRecord*, classifier::ClassifierInput>> inputs;
      for (const auto& r : rows) {
        const auto& p = store.at(r.at("paper_id").get<std::string>());
        // Canonical key order, the same text RAFT hands the scorer.
        const auto advice = advisor::serialize_advice(advisor::parse_advice(r.at("advice").dump()));
        inputs.push_back({&p, {advice, p.abstract, p.contribution_text}});
      }
      std::unique_ptr<classifier::ScoringBackend> scorer;
      if (!train_weights.empty()) {
        auto ref = classifier::ReferenceScorer(c.cfg.scorer.feature_dim);
        std::vector<classifier::TrainingExample> train;
        for (const auto& [p, in] : inputs) {
          if (!p->reviews.empty()) train.push_back({in, reward::empirical_distribution(p->ratings())});
        }
        const double loss = ref.fit(train, {.seed = c.cfg.seed});
        spdlog::info("scorer fit on {} rows, final loss {:.4f}", train.size(), loss);
        ref.save(train_weights);
        scorer = std::make_unique<classifier::ReferenceScorer>(std::move(ref));
      } else {
        scorer = make_scorer(c, weights);
      }
      JsonlWriter w(path_or(out, c, "predictions", true));
      for (const auto& [p, in] : inputs) {
        const auto pred = classifier::score(in, *scorer);
        ordered_json r;
        r["paper_id"] = p->id;
        r["probs"] = pred.distribution.probs;
        r["expected_rating"] = pred.expected_rating;
        r["entropy"] = pred.entropy;
        r["accepted"] = p->accepted ? ordered_json(*p->accepted) : ordered_json(nullptr);
        w.write(r);
      }
      w.commit();
      print_json({{"scored", w.rows()}, {"scorer", scorer->name()}});
      return 0;
    };
  });

  // evaluate
  std::string predictions;
  auto* evaluate = app.add_subcommand("evaluate", "Ranking and decision metrics");
  evaluate->add_option("--predictions", predictions, "predictions.jsonl");
  evaluate->add_option("--out", out, "report.json");
  evaluate->callback([&] {
    run = [&] {
      auto c = load_context(g, patches);
      const auto rows = metrics::load_predictions(path_or(predictions, c, "predictions", true));
      auto report = metrics::evaluate(rows);
      report["config_hash"] = c.hash;
      if (const auto p = path_or(out, c, "report", false); !p.empty()) write_text_file(p, report.dump(2) + "\n");
      print_json(report);
      return 0;
    };
  });

  // report
  std::string report_path;
  auto* report_cmd = app.add_subcommand("report", "Render report.json as markdown");
  report_cmd->add_option("--report", report_path, "report.json");
  report_cmd->add_option("--out", out, "Markdown output (default stdout)");
  report_cmd->callback([&] {
    run = [&] {
      auto c = load_context(g, patches);
      const json report = json::parse(read_text_file(path_or(report_path, c, "report", true)), nullptr, false);
      if (!report.is_object()) throw Error(ErrorKind::kIntegrity, "report is not a JSON object");
      const auto md = metrics::render_markdown(report);
      if (out.empty()) {
        std::cout << md;
      } else {
        write_text_file(out, md);
      }
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  auto logger = spdlog::stderr_color_mt("hypadv");
  spdlog::set_default_logger(logger);
  spdlog::set_level(g.quiet ? spdlog::level::err : g.verbose ? spdlog::level::debug : spdlog::level::info);
  try {
    return run();
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::kUsage ? 2 : 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}

#include "hypadv/advisor.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "hypadv/prompts.hpp"
#include "hypadv/text.hpp"

namespace hypadv::advisor {

using corpus::Section;

void HypothesisInput::validate() const {
  std::vector<std::string> missing;
  if (text::trim(title).empty()) missing.emplace_back("title");
  if (text::trim(abstract).empty()) missing.emplace_back("abstract");
  if (text::trim(contribution).empty()) missing.emplace_back("contribution");
  if (!missing.empty()) throw Error(ErrorKind::kUsage, "hypothesis missing required fields: " + text::join(missing, ", "));
}

HypothesisInput HypothesisInput::from_paper(const corpus::PaperRecord& p) {
  return {p.id, p.title, p.abstract, p.contribution_text, p.method_summary, p.experiment_summary};
}

std::string HypothesisInput::query_text(Section s) const {
  switch (s) {
    case Section::kAbstract:
      return abstract;
    case Section::kContribution:
      return contribution;
    case Section::kMethod:
      if (!text::trim(method).empty()) return method;
      break;
    case Section::kExperiment:
      if (!text::trim(experiment).empty()) return experiment;
      break;
  }
  return abstract + "\n" + contribution;
}

RubricConfig RubricConfig::parse(std::string_view list) {
  RubricConfig r = none();
  std::string s = text::to_lower(list);
  std::replace(s.begin(), s.end(), ',', ' ');
  for (const auto& name : text::split_whitespace(s)) {
    if (name == "none") continue;
    if (name == "all") {
      r = all();
    } else if (name == "novelty") {
      r.novelty = true;
    } else if (name == "significance") {
      r.significance = true;
    } else if (name == "soundness") {
      r.soundness = true;
    } else {
      throw Error(ErrorKind::kUsage, "unknown rubric: " + name);
    }
  }
  return r;
}

std::string RubricConfig::to_string() const {
  std::vector<std::string> parts;
  if (novelty) parts.emplace_back("novelty");
  if (significance) parts.emplace_back("significance");
  if (soundness) parts.emplace_back("soundness");
  return parts.empty() ? "none" : text::join(parts, ",");
}

std::size_t estimate_tokens(std::string_view s) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(text::count_tokens(s)) * 1.3 - 1e-9));
}

std::string build_system_prompt(const RubricConfig& rubrics) {
  std::vector<std::string> paragraphs{std::string(prompts::asset("rubric_motivation.txt"))};
  if (rubrics.novelty) paragraphs.emplace_back(prompts::asset("rubric_novelty.txt"));
  if (rubrics.significance) paragraphs.emplace_back(prompts::asset("rubric_significance.txt"));
  if (rubrics.soundness) paragraphs.emplace_back(prompts::asset("rubric_soundness.txt"));
  std::string criteria;
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    criteria += "\n" + std::to_string(i + 1) + ". " + paragraphs[i];
  }
  std::vector<std::string> focus;
  if (rubrics.novelty) focus.emplace_back("novelty");
  if (rubrics.significance) focus.emplace_back("contribution");
  if (rubrics.soundness) focus.emplace_back("soundness");
  std::string focus_text;
  if (!focus.empty()) {
    focus_text = ", with a focus on ";
    for (std::size_t i = 0; i < focus.size(); ++i) {
      if (i > 0) focus_text += (i + 1 == focus.size()) ? " and " : ", ";
      focus_text += focus[i];
    }
  }
  return text::render(prompts::asset("advisor_system.txt"), {{"focus", focus_text}, {"criteria", criteria}});
}

namespace {

std::string render_block(const std::vector<RetrievalHit>& hits, const AssembleOptions& options) {
  if (hits.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const std::string title = options.title_of ? options.title_of(hits[i].paper_id) : hits[i].paper_id;
    if (i > 0) out += "\n\n";
    out += "[" + std::to_string(i + 1) + "] " + (title.empty() ? hits[i].paper_id : title) + "\n" +
           hits[i].source_text;
  }
  return out;
}

std::string render_user(const HypothesisInput& t, const std::array<std::string, 4>& blocks) {
  return text::render(prompts::asset("advisor_user.txt"), {{"title", t.title},
                                                           {"abstract", t.abstract},
                                                           {"contribution", t.contribution},
                                                           {"method", t.method},
                                                           {"experiment", t.experiment},
                                                           {"related_abstracts", blocks[0]},
                                                           {"related_contributions", blocks[1]},
                                                           {"related_methods", blocks[2]},
                                                           {"related_experiments", blocks[3]}});
}

}  // namespace

AssembledContext assemble_context(const HypothesisInput& target, SectionHits hits, const AssembleOptions& options) {
  target.validate();
  AssembledContext ctx;
  ctx.system_prompt = build_system_prompt(options.rubrics);
  const std::size_t system_tokens = estimate_tokens(ctx.system_prompt);
  const std::size_t bare = system_tokens + estimate_tokens(render_user(target, {"", "", "", ""}));
  if (bare > options.context_budget) {
    throw Error(ErrorKind::kAssembly, "target exceeds context budget (" + std::to_string(bare) + " > " +
                                          std::to_string(options.context_budget) + " tokens)");
  }
  for (auto& section : hits) {
    std::stable_sort(section.begin(), section.end(),
                     [](const RetrievalHit& a, const RetrievalHit& b) { return a.score > b.score; });
  }
  std::array<std::string, 4> blocks;
  std::array<std::size_t, 4> block_tokens{};
  for (std::size_t s = 0; s < 4; ++s) {
    blocks[s] = render_block(hits[s], options);
    block_tokens[s] = text::count_tokens(blocks[s]);
  }
  while (true) {
    ctx.user_prompt = render_user(target, blocks);
    ctx.token_estimate = system_tokens + estimate_tokens(ctx.user_prompt);
    if (ctx.token_estimate <= options.context_budget) break;
    std::size_t longest = 4;
    for (std::size_t s = 0; s < 4; ++s) {
      if (hits[s].empty()) continue;
      if (longest == 4 || block_tokens[s] > block_tokens[longest]) longest = s;
    }
    if (longest == 4) {
      throw Error(ErrorKind::kAssembly, "target exceeds context budget after dropping all retrieved entries");
    }
    hits[longest].pop_back();
    ++ctx.dropped_hits;
    blocks[longest] = render_block(hits[longest], options);
    block_tokens[longest] = text::count_tokens(blocks[longest]);
  }
  if (ctx.dropped_hits > 0) spdlog::info("context: dropped {} retrieved entries to fit budget", ctx.dropped_hits);
  ctx.hits = std::move(hits);
  return ctx;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t key_index(std::string_view key) {
  for (std::size_t i = 0; i < kAdviceKeys.size(); ++i) {
    if (kAdviceKeys[i] == key) return i;
  }
  throw Error(ErrorKind::kUsage, "unknown advice key: " + std::string(key));
}

}  // namespace

const std::string& StructuredAdvice::operator[](std::string_view key) const { return fields[key_index(key)]; }
std::string& StructuredAdvice::operator[](std::string_view key) { return fields[key_index(key)]; }

StructuredAdvice parse_advice(std::string_view raw) {
  const auto parsed = extract_json_object(raw);
  if (!parsed) throw Error(ErrorKind::kAdvising, "invalid JSON");
  StructuredAdvice advice;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < kAdviceKeys.size(); ++i) {
    const std::string key(kAdviceKeys[i]);
    auto it = parsed->find(key);
    if (it == parsed->end()) {
      problems.push_back("missing key: " + key);
      continue;
    }
    std::string value;
    if (it->is_string()) {
      value = it->get<std::string>();
    } else if (it->is_array() && std::all_of(it->begin(), it->end(), [](const json& e) { return e.is_string(); })) {
      std::vector<std::string> items;
      for (const auto& e : *it) items.push_back(e.get<std::string>());
      value = text::join(items, "\n");
    } else {
      problems.push_back("not a string: " + key);
      continue;
    }
    if (text::trim(value).empty()) {
      problems.push_back("empty field: " + key);
      continue;
    }
    advice.fields[i] = std::move(value);
  }
  if (!problems.empty()) throw Error(ErrorKind::kAdvising, text::join(problems, "; "));
  for (const auto& [key, value] : parsed->items()) {
    if (std::find(kAdviceKeys.begin(), kAdviceKeys.end(), key) == kAdviceKeys.end()) advice.extra[key] = value;
  }
  return advice;
}

ordered_json advice_to_json(const StructuredAdvice& advice) {
  ordered_json j;
  for (std::size_t i = 0; i < kAdviceKeys.size(); ++i) j[std::string(kAdviceKeys[i])] = advice.fields[i];
  for (const auto& [key, value] : advice.extra) j[key] = value;
  return j;
}

std::string serialize_advice(const StructuredAdvice& advice) { return advice_to_json(advice).dump(); }

std::string advice_plain_text(const StructuredAdvice& advice) {
  return text::join(std::span<const std::string>(advice.fields), "\n");
}

// ---------------------------------------------------------------------------

SectionHits retrieve(const HypothesisInput& target, const index::IndexSet& indexes, gateway::LlmBackend& backend,
                     const RetrievalConfig& config) {
  SectionHits out;
  for (std::size_t s = 0; s < 4; ++s) {
    const Section section = corpus::kAllSections[s];
    const auto& idx = indexes.at(section);
    if (idx.empty()) {
      spdlog::warn("retrieval: {} index is empty", corpus::section_name(section));
      continue;
    }
    index::QueryOptions q;
    q.k = config.k;
    if (!target.paper_id.empty()) q.exclude_id = target.paper_id;
    q.contamination_guard = config.contamination_guard;
    q.admit = config.admit;
    auto result = index::query_top_k(idx, backend, target.query_text(section), q);
    if (result.short_result) {
      spdlog::debug("retrieval: {} returned {} of {} entries", corpus::section_name(section), result.hits.size(),
                    config.k);
    }
    out[s] = std::move(result.hits);
  }
  return out;
}

ordered_json transcript_to_json(const Transcript& t) {
  ordered_json j;
  j["prompt_version"] = std::string(prompts::version());
  j["model"] = t.model_name;
  j["decoding"] = {{"temperature", t.decoding.temperature},
                   {"top_p", t.decoding.top_p},
                   {"repetition_penalty", t.decoding.repetition_penalty},
                   {"max_tokens", t.decoding.max_tokens}};
  j["seed"] = t.seed;
  j["system_prompt"] = t.context.system_prompt;
  j["user_prompt"] = t.context.user_prompt;
  j["token_estimate"] = t.context.token_estimate;
  j["dropped_hits"] = t.context.dropped_hits;
  ordered_json retrieved;
  for (std::size_t s = 0; s < 4; ++s) {
    ordered_json list = ordered_json::array();
    for (const auto& h : t.context.hits[s]) list.push_back({{"paper_id", h.paper_id}, {"score", h.score}});
    retrieved[std::string(corpus::section_name(corpus::kAllSections[s]))] = std::move(list);
  }
  j["retrieved"] = std::move(retrieved);
  j["attempts"] = ordered_json::array();
  for (const auto& a : t.attempts) {
    j["attempts"].push_back({{"request_id", a.request_id}, {"raw", a.raw}, {"problem", a.problem}});
  }
  return j;
}

AdviceResult generate(const AssembledContext& context, gateway::LlmBackend& backend, const AdviseConfig& config) {
  Transcript transcript;
  transcript.context = context;
  transcript.model_name = config.model_name;
  transcript.decoding = config.decoding;
  transcript.seed = config.seed;
  std::string problem;
  for (int attempt = 0; attempt <= config.repair_retries; ++attempt) {
    gateway::ChatRequest req;
    req.system_prompt = context.system_prompt;
    if (attempt > 0) {
      req.system_prompt += "\n\n" + text::render(prompts::asset("json_repair.txt"), {{"problem", problem}});
    }
    req.user_prompt = context.user_prompt;
    req.model_name = config.model_name;
    req.seed = attempt == 0 ? config.seed : text::mix64(config.seed, static_cast<std::uint64_t>(attempt));
    config.decoding.apply(req);
    const auto resp = backend.chat_complete(req);
    Attempt a{resp.request_id, resp.text, ""};
    try {
      auto advice = parse_advice(resp.text);
      transcript.attempts.push_back(std::move(a));
      return {std::move(advice), std::move(transcript)};
    } catch (const Error& e) {
      problem = e.what();
      a.problem = problem;
      transcript.attempts.push_back(std::move(a));
      spdlog::warn("advice attempt {} rejected: {}", attempt + 1, problem);
    }
  }
  throw AdvisingError("advice output invalid after " + std::to_string(config.repair_retries + 1) +
                          " attempts: " + problem,
                      std::move(transcript));
}

AdviceResult advise(const HypothesisInput& target, const index::IndexSet& indexes, gateway::LlmBackend& backend,
                    const AdviseConfig& config) {
  target.validate();
  const auto hits = retrieve(target, indexes, backend, config.retrieval);
  const auto context = assemble_context(target, hits, config.assemble);
  return generate(context, backend, config);
}

}  // namespace hypadv::advisor

#include "hypadv/summarizer.hpp"

#include <spdlog/spdlog.h>

#include <array>
#include <sstream>

#include "hypadv/json_io.hpp"
#include "hypadv/prompts.hpp"
#include "hypadv/text.hpp"

namespace hypadv::summarizer {

namespace {

// One chat call with JSON repair retries. `check` returns an empty string
// when the parsed object is acceptable, else a description of the problem.
template <typename Check>
std::optional<json> call_json(std::string_view system, std::string_view user, gateway::LlmBackend& backend,
                              const LlmCallConfig& config, std::uint64_t seed, Check&& check, std::string* last_problem) {
  std::string problem;
  for (int attempt = 0; attempt <= config.repair_retries; ++attempt) {
    gateway::ChatRequest req;
    req.system_prompt = std::string(system);
    if (attempt > 0) {
      req.system_prompt += "\n\n" + text::render(prompts::asset("json_repair.txt"), {{"problem", problem}});
    }
    req.user_prompt = std::string(user);
    req.model_name = config.model_name;
    req.seed = attempt == 0 ? seed : text::mix64(seed, static_cast<std::uint64_t>(attempt));
    config.decoding.apply(req);
    const auto resp = backend.chat_complete(req);
    auto parsed = extract_json_object(resp.text);
    problem = parsed ? check(*parsed) : "invalid JSON";
    if (problem.empty()) return parsed;
    spdlog::debug("attempt {} rejected: {}", attempt + 1, problem);
  }
  if (last_problem) *last_problem = problem;
  return std::nullopt;
}

constexpr std::array<const char*, 4> kSummaryKeys = {"abstract_summary", "contribution_summary", "method_summary",
                                                     "experiment_summary"};

}  // namespace

SectionSummaries summarize_sections(std::string_view fulltext, std::string_view prompt, gateway::LlmBackend& backend,
                                    const LlmCallConfig& config) {
  if (text::trim(fulltext).empty()) throw Error(ErrorKind::kUsage, "empty full text");
  auto check = [](const json& j) -> std::string {
    for (const char* key : kSummaryKeys) {
      auto it = j.find(key);
      if (it == j.end()) return std::string("missing key: ") + key;
      if (!it->is_string() || text::trim(it->get<std::string>()).empty()) return std::string("empty field: ") + key;
    }
    return {};
  };
  std::string problem;
  const auto parsed = call_json(prompt, fulltext, backend, config, config.seed, check, &problem);
  if (!parsed) throw Error(ErrorKind::kExtraction, "summarization failed: " + problem);
  SectionSummaries s;
  s.abstract_summary = (*parsed)["abstract_summary"].get<std::string>();
  s.contribution_summary = (*parsed)["contribution_summary"].get<std::string>();
  s.method_summary = (*parsed)["method_summary"].get<std::string>();
  s.experiment_summary = (*parsed)["experiment_summary"].get<std::string>();
  const std::size_t source_tokens = text::count_tokens(fulltext);
  const std::size_t summary_tokens = text::count_tokens(s.abstract_summary) +
                                     text::count_tokens(s.contribution_summary) +
                                     text::count_tokens(s.method_summary) + text::count_tokens(s.experiment_summary);
  s.compression_ratio = static_cast<double>(source_tokens) / static_cast<double>(summary_tokens);
  if (source_tokens < kShortSourceTokens) s.warnings.emplace_back("source shorter than summary budget");
  if (s.compression_ratio < kMinCompressionRatio) {
    std::ostringstream w;
    w << "compression ratio " << s.compression_ratio << " below " << kMinCompressionRatio;
    s.warnings.push_back(w.str());
  }
  for (const auto& w : s.warnings) spdlog::warn("summarize: {}", w);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct Heading {
  std::size_t line = 0;
  std::string text;
};

}  // namespace

std::optional<std::string> introduction_section(std::string_view markdown) {
  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(markdown)};
    for (std::string l; std::getline(in, l);) lines.push_back(std::move(l));
  }
  std::vector<Heading> headings;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string t = text::trim(lines[i]);
    if (t.size() > 1 && t[0] == '#') {
      const auto start = t.find_first_not_of("# ");
      if (start != std::string::npos) headings.push_back({i, text::to_lower(t.substr(start))});
    }
  }
  std::optional<std::size_t> pick;
  for (std::size_t h = 0; h < headings.size() && !pick; ++h) {
    if (headings[h].text.find("introduction") != std::string::npos) pick = h;
  }
  for (std::size_t h = 0; h + 1 < headings.size() && !pick; ++h) {
    if (headings[h].text.find("abstract") != std::string::npos) pick = h + 1;
  }
  if (!pick && headings.size() >= 2) pick = 1;
  if (!pick) return std::nullopt;
  const std::size_t begin = headings[*pick].line + 1;
  const std::size_t end = *pick + 1 < headings.size() ? headings[*pick + 1].line : lines.size();
  std::vector<std::string> body(lines.begin() + static_cast<std::ptrdiff_t>(begin),
                                lines.begin() + static_cast<std::ptrdiff_t>(end));
  return text::join(body, "\n");
}

bool is_verbatim(std::string_view extracted, std::string_view source) {
  const std::string needle = text::normalize_for_verbatim(extracted);
  if (needle.empty()) return false;
  return text::normalize_for_verbatim(source).find(needle) != std::string::npos;
}

namespace {

struct Sample {
  int label = 0;
  std::string text;
  bool verified = false;
  std::vector<std::string> warnings;
};

std::optional<int> read_label(const json& j) {
  auto it = j.find("contribution_label");
  if (it == j.end()) return std::nullopt;
  if (it->is_number_integer()) {
    const int v = it->get<int>();
    if (v == 0 || v == 1) return v;
  } else if (it->is_string()) {
    const auto s = text::trim(it->get<std::string>());
    if (s == "0" || s == "1") return s == "1" ? 1 : 0;
  }
  return std::nullopt;
}

std::optional<Sample> extract_once(std::string_view fulltext, std::string_view prompt, gateway::LlmBackend& backend,
                                   const LlmCallConfig& config, std::uint64_t seed) {
  bool saw_unverified = false;
  json unverified;
  auto check = [&](const json& j) -> std::string {
    const auto label = read_label(j);
    if (!label) return "contribution_label must be 0 or 1";
    auto it = j.find("contribution_text");
    if (it == j.end() || !it->is_string() || text::trim(it->get<std::string>()).empty()) {
      return "contribution_text must be a non-empty string";
    }
    if (*label == 1 && !is_verbatim(it->get<std::string>(), fulltext)) {
      saw_unverified = true;
      unverified = j;
      return "contribution_text is not a verbatim copy of the paper text";
    }
    return {};
  };
  std::string problem;
  const auto parsed = call_json(prompt, fulltext, backend, config, seed, check, &problem);
  Sample s;
  if (parsed) {
    s.label = *read_label(*parsed);
    s.text = (*parsed)["contribution_text"].get<std::string>();
    s.verified = s.label == 1;
  } else if (saw_unverified) {
    s.label = 0;
    s.text = unverified["contribution_text"].get<std::string>();
    s.warnings.emplace_back("label-1 text failed verbatim check; downgraded to label 0");
  } else {
    spdlog::warn("extraction sample failed: {}", problem);
    return std::nullopt;
  }
  if (s.label == 0 && text::count_sentences(s.text) > 3) {
    s.text = text::first_sentences(s.text, 3);
    s.warnings.emplace_back("label-0 summary truncated to 3 sentences");
  }
  return s;
}

}  // namespace

ContributionExtraction extract_contribution(std::string_view fulltext, std::string_view prompt,
                                            gateway::LlmBackend& backend, const LlmCallConfig& config,
                                            std::size_t samples) {
  if (samples == 0) throw Error(ErrorKind::kUsage, "samples must be >= 1");
  if (!introduction_section(fulltext)) throw Error(ErrorKind::kExtraction, "no introduction section found");
  std::vector<Sample> ok;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::uint64_t seed = samples == 1 ? config.seed : text::mix64(config.seed, i);
    if (auto s = extract_once(fulltext, prompt, backend, config, seed)) ok.push_back(std::move(*s));
  }
  if (ok.empty()) throw Error(ErrorKind::kExtraction, "no valid extraction output");
  std::size_t ones = 0;
  for (const auto& s : ok) ones += s.label == 1 ? 1 : 0;
  const std::size_t zeros = ok.size() - ones;
  int label = ok.front().label;
  if (ones > zeros) label = 1;
  if (zeros > ones) label = 0;
  ContributionExtraction out;
  out.samples = samples;
  for (const auto& s : ok) {
    if (s.label != label) continue;
    if (out.agreeing_samples++ == 0) {
      out.contribution_label = s.label;
      out.contribution_text = s.text;
      out.verbatim_verified = s.verified;
      out.warnings = s.warnings;
    }
  }
  if (ok.size() < samples) {
    out.warnings.push_back(std::to_string(samples - ok.size()) + " of " + std::to_string(samples) +
                           " samples failed");
  }
  return out;
}

}  // namespace hypadv::summarizer

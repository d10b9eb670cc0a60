#include "hypadv/gateway.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "hypadv/error.hpp"
#include "hypadv/text.hpp"

namespace hypadv::gateway {

void ChatRequest::validate() const {
  if (!(temperature >= 0.0)) throw Error(ErrorKind::kUsage, "temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorKind::kUsage, "top_p must be in (0,1]");
  if (!(repetition_penalty >= 1.0)) {
    throw Error(ErrorKind::kUsage, "repetition_penalty must be >= 1");
  }
  if (max_tokens <= 0) throw Error(ErrorKind::kUsage, "max_tokens must be positive");
}

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (float v : values) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

void EmbeddingVector::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorKind::kIntegrity, "cannot normalize zero vector");
  for (float& v : values) v = static_cast<float>(v / n);
}

ordered_json chat_body(const ChatRequest& r) {
  ordered_json body;
  body["model"] = r.model_name;
  body["messages"] = ordered_json::array({
      ordered_json{{"role", "system"}, {"content", r.system_prompt}},
      ordered_json{{"role", "user"}, {"content", r.user_prompt}},
  });
  body["temperature"] = r.temperature;
  body["top_p"] = r.top_p;
  body["max_tokens"] = r.max_tokens;
  body["seed"] = r.seed;
  // Not part of the OpenAI schema; vLLM-style servers accept it.
  if (r.repetition_penalty != 1.0) body["repetition_penalty"] = r.repetition_penalty;
  return body;
}

ordered_json embeddings_body(const std::string& model, std::span<const std::string> texts) {
  ordered_json body;
  body["model"] = model;
  body["input"] = ordered_json::array();
  for (const auto& t : texts) body["input"].push_back(t);
  return body;
}

namespace {

void check_embed_input(std::span<const std::string> texts) {
  if (texts.empty()) throw Error(ErrorKind::kUsage, "embed: empty input list");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw Error(ErrorKind::kUsage, "embed: empty text at index " + std::to_string(i));
  }
}

void check_uniform_dimension(const std::vector<EmbeddingVector>& out) {
  for (const auto& v : out) {
    if (v.values.size() != out.front().values.size()) {
      throw Error(ErrorKind::kIntegrity, "embedding dimension mismatch within batch");
    }
  }
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 256;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

// ---------------------------------------------------------------------------

bool is_retryable_status(int status) {
  return status == 0 || status == 408 || status == 429 || (status >= 500 && status <= 599);
}

RetryingPoster::RetryingPoster(std::shared_ptr<Transport> transport, RetryPolicy policy,
                               std::chrono::milliseconds timeout, std::uint64_t jitter_seed,
                               std::function<void(std::chrono::milliseconds)> sleep)
    : transport_(std::move(transport)),
      policy_(policy),
      timeout_(timeout),
      sleep_(std::move(sleep)),
      jitter_(jitter_seed) {
  if (!transport_) throw Error(ErrorKind::kUsage, "no transport configured");
  if (policy_.max_attempts < 1) throw Error(ErrorKind::kUsage, "max_attempts must be >= 1");
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

HttpResponse RetryingPoster::post(const std::string& url, const std::string& body,
                                  const Headers& headers) {
  HttpResponse last;
  for (int attempt = 0; attempt < policy_.max_attempts; ++attempt) {
    last = transport_->post(url, body, headers, timeout_);
    if (last.status >= 200 && last.status < 300) return last;
    if (!is_retryable_status(last.status)) {
      throw TransportError("HTTP " + std::to_string(last.status) + " from " + url + ": " +
                               excerpt(last.body),
                           last.status, excerpt(last.body));
    }
    if (attempt + 1 == policy_.max_attempts) break;
    const double exp_delay = static_cast<double>(policy_.base_delay.count()) * std::pow(2.0, attempt);
    const double capped = std::min(exp_delay, static_cast<double>(policy_.max_delay.count()));
    double factor;
    {
      std::lock_guard lock(jitter_mutex_);
      factor = 0.5 + 0.5 * jitter_.uniform();
    }
    const auto delay = std::chrono::milliseconds(static_cast<long long>(capped * factor));
    spdlog::debug("retrying {} after status {} (attempt {}/{}, {} ms)", url, last.status,
                  attempt + 1, policy_.max_attempts, delay.count());
    sleep_(delay);
  }
  throw TransportError("retries exhausted: last status " + std::to_string(last.status) + " from " + url,
                       last.status, excerpt(last.body));
}

// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendConfig config, std::shared_ptr<Transport> transport,
                         std::function<void(std::chrono::milliseconds)> sleep)
    : config_(std::move(config)),
      poster_(std::move(transport), config_.retry, config_.timeout, config_.jitter_seed, std::move(sleep)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
  if (config_.base_url.empty()) throw Error(ErrorKind::kUsage, "endpoint base_url not configured");
  while (!config_.base_url.empty() && config_.base_url.back() == '/') config_.base_url.pop_back();
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
      throw Error(ErrorKind::kUsage, "credential environment variable " + config_.api_key_env + " is not set");
    }
    api_key_ = key;
  }
  if (config_.embed_batch_cap == 0) throw Error(ErrorKind::kUsage, "embed_batch_cap must be positive");
}

Headers HttpBackend::headers() const {
  Headers h{{"Content-Type", "application/json"}};
  if (!api_key_.empty()) h.emplace_back("Authorization", "Bearer " + api_key_);
  return h;
}

std::string HttpBackend::next_request_id() {
  std::lock_guard lock(id_mutex_);
  return "req-" + std::to_string(++request_counter_);
}

namespace {

// Holds one in-flight slot for the duration of a wire call.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

}  // namespace

ChatResponse HttpBackend::chat_complete(const ChatRequest& request) {
  request.validate();
  if (request.model_name.empty()) throw Error(ErrorKind::kUsage, "chat model name not configured");
  const std::string id = next_request_id();
  const std::string body = chat_body(request).dump();
  spdlog::debug("[{}] POST {}/chat/completions model={} bytes={}", id, config_.base_url,
                request.model_name, body.size());
  HttpResponse resp;
  {
    SlotGuard slot(in_flight_);
    resp = poster_.post(config_.base_url + "/chat/completions", body, headers());
  }
  json parsed = json::parse(resp.body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array() ||
      parsed["choices"].empty()) {
    throw TransportError("malformed chat response", resp.status, excerpt(resp.body));
  }
  ChatResponse out;
  out.request_id = id;
  const auto& msg = parsed["choices"][0]["message"];
  if (!msg.contains("content") || !msg["content"].is_string()) {
    throw TransportError("chat response has no text content", resp.status, excerpt(resp.body));
  }
  out.text = msg["content"].get<std::string>();
  if (auto u = parsed.find("usage"); u != parsed.end() && u->is_object()) {
    out.usage.prompt_tokens = u->value("prompt_tokens", 0);
    out.usage.completion_tokens = u->value("completion_tokens", 0);
  }
  spdlog::debug("[{}] completion chars={} usage={}/{}", id, out.text.size(),
                out.usage.prompt_tokens, out.usage.completion_tokens);
  return out;
}

std::vector<EmbeddingVector> HttpBackend::embed(std::span<const std::string> texts) {
  check_embed_input(texts);
  if (config_.embedding_model.empty()) throw Error(ErrorKind::kUsage, "embedding model not configured");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += config_.embed_batch_cap) {
    const std::size_t count = std::min(config_.embed_batch_cap, texts.size() - start);
    const auto batch = texts.subspan(start, count);
    const std::string id = next_request_id();
    const std::string body = embeddings_body(config_.embedding_model, batch).dump();
    spdlog::debug("[{}] POST {}/embeddings n={}", id, config_.base_url, count);
    HttpResponse resp;
    {
      SlotGuard slot(in_flight_);
      resp = poster_.post(config_.base_url + "/embeddings", body, headers());
    }
    json parsed = json::parse(resp.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("data") || !parsed["data"].is_array() ||
        parsed["data"].size() != count) {
      throw TransportError("malformed embeddings response", resp.status, excerpt(resp.body));
    }
    std::vector<EmbeddingVector> batch_out(count);
    for (const auto& item : parsed["data"]) {
      const std::size_t idx = item.value("index", std::size_t{0});
      if (idx >= count || !item.contains("embedding")) {
        throw TransportError("embeddings response index out of range", resp.status, excerpt(resp.body));
      }
      batch_out[idx].values = item["embedding"].get<std::vector<float>>();
    }
    for (auto& v : batch_out) out.push_back(std::move(v));
  }
  check_uniform_dimension(out);
  return out;
}

// ---------------------------------------------------------------------------

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {
  if (config_.embedding_dim == 0) throw Error(ErrorKind::kUsage, "embedding_dim must be positive");
}

std::string MockBackend::prompt_key(const ChatRequest& request) {
  return text::sha256_hex(request.system_prompt + '\x1f' + request.user_prompt);
}

void MockBackend::add_fixture(const std::string& key, std::vector<std::string> completions) {
  if (completions.empty()) throw Error(ErrorKind::kUsage, "fixture needs at least one completion");
  fixtures_[key] = std::move(completions);
}

void MockBackend::set_fallback(Generator generator) { fallback_ = std::move(generator); }

std::uint64_t MockBackend::request_hash(const ChatRequest& r) {
  std::ostringstream os;
  os << r.model_name << '\x1f' << r.system_prompt << '\x1f' << r.user_prompt << '\x1f'
     << r.temperature << '\x1f' << r.top_p << '\x1f' << r.repetition_penalty << '\x1f'
     << r.max_tokens << '\x1f' << r.seed;
  return text::fnv1a64(os.str());
}

ChatResponse MockBackend::chat_complete(const ChatRequest& request) {
  request.validate();
  ChatResponse out;
  if (auto it = fixtures_.find(prompt_key(request)); it != fixtures_.end()) {
    out.text = it->second[request.seed % it->second.size()];
  } else {
    const std::uint64_t seed = text::mix64(config_.seed, request_hash(request));
    out.text = fallback_ ? fallback_(seed, request) : synthesize_completion(seed, request);
  }
  out.usage.prompt_tokens =
      static_cast<int>(text::count_tokens(request.system_prompt) + text::count_tokens(request.user_prompt));
  out.usage.completion_tokens = static_cast<int>(text::count_tokens(out.text));
  out.request_id = "mock-" + std::to_string(request_hash(request));
  return out;
}

std::vector<EmbeddingVector> MockBackend::embed(std::span<const std::string> texts) {
  check_embed_input(texts);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hashed_embedding(t, config_.embedding_dim, config_.seed));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string strip_punct(std::string_view token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  while (b < e && !alnum(token[b])) ++b;
  while (e > b && !alnum(token[e - 1])) --e;
  return text::to_lower(token.substr(b, e - b));
}

}  // namespace

EmbeddingVector hashed_embedding(std::string_view input, std::size_t dim, std::uint64_t seed) {
  EmbeddingVector v;
  v.values.assign(dim, 0.0f);
  for (const auto& tok : text::split_whitespace(input)) {
    const std::string w = strip_punct(tok);
    if (w.empty()) continue;
    const std::uint64_t h = text::mix64(seed, text::fnv1a64(w));
    const std::size_t slot = static_cast<std::size_t>(h % dim);
    v.values[slot] += ((h >> 63) != 0U) ? -1.0f : 1.0f;
  }
  // Small text-specific dense component keeps every vector non-zero.
  Rng rng(text::mix64(seed, text::fnv1a64(input)));
  for (auto& x : v.values) x += static_cast<float>(0.01 * (rng.uniform() - 0.5));
  v.normalize();
  return v;
}

namespace {

std::string sample_sentence(Rng& rng, const std::vector<std::string>& vocab, std::size_t min_words,
                            std::size_t max_words) {
  const std::size_t n = min_words + static_cast<std::size_t>(rng.below(max_words - min_words + 1));
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    std::string w = vocab.empty() ? std::string("idea") : strip_punct(vocab[rng.below(vocab.size())]);
    if (w.empty()) w = "idea";
    if (i) s += ' ';
    s += w;
  }
  s += '.';
  return s;
}

std::vector<std::string> content_vocab(std::string_view user_prompt) {
  std::vector<std::string> vocab;
  for (auto& tok : text::split_whitespace(user_prompt)) {
    if (tok.rfind("**", 0) == 0) continue;
    if (!strip_punct(tok).empty()) vocab.push_back(std::move(tok));
  }
  return vocab;
}

bool is_list_line(std::string_view line) {
  const std::string t = text::trim(line);
  if (t.empty()) return false;
  if (t[0] == '-' || t[0] == '*' || t[0] == '+') return true;
  std::size_t d = 0;
  while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
  return d > 0 && d < t.size() && (t[d] == '.' || t[d] == ')');
}

std::string extraction_completion(Rng& rng, const ChatRequest& r) {
  std::vector<std::string> lines;
  {
    std::istringstream in(r.user_prompt);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string lower = text::to_lower(lines[i]);
    if (lower.find("contributions") == std::string::npos || lines[i].rfind('#', 0) == 0) continue;
    std::size_t end = i + 1;
    while (end < lines.size() && is_list_line(lines[end])) ++end;
    if (end == i + 1) continue;
    std::vector<std::string> block(lines.begin() + static_cast<std::ptrdiff_t>(i),
                                   lines.begin() + static_cast<std::ptrdiff_t>(end));
    return json{{"contribution_label", 1}, {"contribution_text", text::join(block, "\n")}}.dump();
  }
  const auto vocab = content_vocab(r.user_prompt);
  const std::string summary = sample_sentence(rng, vocab, 8, 16) + " " + sample_sentence(rng, vocab, 8, 16);
  return json{{"contribution_label", 0}, {"contribution_text", summary}}.dump();
}

std::string summaries_completion(Rng& rng, const ChatRequest& r) {
  const auto vocab = content_vocab(r.user_prompt);
  // Roughly 16x compression across the four summaries.
  const std::size_t per_section = std::max<std::size_t>(6, vocab.size() / 64);
  ordered_json j;
  for (const char* key : {"abstract_summary", "contribution_summary", "method_summary", "experiment_summary"}) {
    std::string s;
    while (text::count_tokens(s) < per_section) {
      if (!s.empty()) s += ' ';
      s += sample_sentence(rng, vocab, 6, 12);
    }
    j[key] = s;
  }
  return j.dump();
}

std::string advice_completion(Rng& rng, const ChatRequest& r) {
  const auto vocab = content_vocab(r.user_prompt);
  ordered_json j;
  for (const char* key : {"summary", "comparison with previous works", "novelty", "significance", "soundness",
                          "strengths", "weaknesses", "evaluation", "suggestion"}) {
    j[key] = sample_sentence(rng, vocab, 10, 24) + " " + sample_sentence(rng, vocab, 6, 14);
  }
  return j.dump();
}

// Union of the parents' lines in first-seen order.
std::string crossover_completion(const ChatRequest& r) {
  std::vector<std::string> out;
  std::istringstream in(r.user_prompt);
  std::string line;
  bool inside = false;
  while (std::getline(in, line)) {
    if (line.rfind("<prompt", 0) == 0) {
      inside = true;
      continue;
    }
    if (line.rfind("</prompt>", 0) == 0) {
      inside = false;
      continue;
    }
    if (!inside) continue;
    if (std::find(out.begin(), out.end(), line) == out.end() || text::trim(line).empty()) out.push_back(line);
  }
  return text::trim(text::join(out, "\n"));
}

}  // namespace

std::string synthesize_completion(std::uint64_t seed, const ChatRequest& request) {
  Rng rng(seed);
  const std::string& sys = request.system_prompt;
  if (sys.find("\"comparison with previous works\"") != std::string::npos) return advice_completion(rng, request);
  if (sys.find("contribution_label") != std::string::npos) return extraction_completion(rng, request);
  if (sys.find("abstract_summary") != std::string::npos) return summaries_completion(rng, request);
  if (sys.find("<prompt") != std::string::npos || request.user_prompt.find("<prompt") != std::string::npos) {
    return crossover_completion(request);
  }
  return sample_sentence(rng, content_vocab(request.user_prompt), 8, 20);
}

}  // namespace hypadv::gateway

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hypadv/json_io.hpp"
#include "hypadv/random.hpp"

namespace hypadv::gateway {

struct ChatRequest {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.6;
  double top_p = 0.95;
  double repetition_penalty = 1.0;
  int max_tokens = 4096;
  std::string model_name;
  // Sampling seed forwarded on the wire; also distinguishes otherwise
  // identical requests (e.g. the K candidates of one hypothesis).
  std::uint64_t seed = 0;

  // Throws Error(kUsage) when a decoding parameter is out of range.
  void validate() const;
};

struct DecodingParams {
  double temperature = 0.6;
  double top_p = 0.95;
  double repetition_penalty = 1.0;
  int max_tokens = 4096;

  void apply(ChatRequest& request) const {
    request.temperature = temperature;
    request.top_p = top_p;
    request.repetition_penalty = repetition_penalty;
    request.max_tokens = max_tokens;
  }
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  Usage usage;
  std::string request_id;
};

struct EmbeddingVector {
  std::vector<float> values;

  double norm() const;
  // Scales to unit L2 norm; throws Error(kIntegrity) on a zero vector.
  void normalize();
};

// OpenAI-compatible request bodies.
ordered_json chat_body(const ChatRequest& request);
ordered_json embeddings_body(const std::string& model, std::span<const std::string> texts);

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual ChatResponse chat_complete(const ChatRequest& request) = 0;
  // One vector per input, order-preserving. Throws Error(kUsage) on an empty
  // list or an empty text and Error(kIntegrity) on mixed dimensions.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
  virtual std::string embedding_model() const = 0;
  // Upper bound on concurrent calls the backend is willing to serve.
  virtual std::size_t max_in_flight() const { return 1; }
};

// ---------------------------------------------------------------------------
// HTTP transport

struct HttpResponse {
  int status = 0;  // 0 = connection failure or timeout
  std::string body;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const Headers& headers, std::chrono::milliseconds timeout) = 0;
};

std::shared_ptr<Transport> make_http_transport();

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{16000};
};

bool is_retryable_status(int status);

// POST with the retry policy applied; returns the first 2xx response.
// `sleep` is injectable so tests do not wait on real backoff.
class RetryingPoster {
 public:
  RetryingPoster(std::shared_ptr<Transport> transport, RetryPolicy policy,
                 std::chrono::milliseconds timeout, std::uint64_t jitter_seed = 0,
                 std::function<void(std::chrono::milliseconds)> sleep = {});

  HttpResponse post(const std::string& url, const std::string& body, const Headers& headers);

 private:
  std::shared_ptr<Transport> transport_;
  RetryPolicy policy_;
  std::chrono::milliseconds timeout_;
  std::function<void(std::chrono::milliseconds)> sleep_;
  std::mutex jitter_mutex_;
  Rng jitter_;
};

struct HttpBackendConfig {
  std::string base_url;                      // e.g. https://api.openai.com/v1
  std::string api_key_env = "OPENAI_API_KEY";  // empty = no Authorization header
  std::string embedding_model;
  std::chrono::milliseconds timeout{120000};
  RetryPolicy retry;
  std::size_t max_in_flight = 8;
  std::size_t embed_batch_cap = 100;
  std::uint64_t jitter_seed = 0;
};

class HttpBackend final : public LlmBackend {
 public:
  HttpBackend(HttpBackendConfig config, std::shared_ptr<Transport> transport,
              std::function<void(std::chrono::milliseconds)> sleep = {});

  ChatResponse chat_complete(const ChatRequest& request) override;
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  std::string embedding_model() const override { return config_.embedding_model; }
  std::size_t max_in_flight() const override { return config_.max_in_flight; }

 private:
  Headers headers() const;
  std::string next_request_id();

  HttpBackendConfig config_;
  std::string api_key_;
  RetryingPoster poster_;
  std::counting_semaphore<> in_flight_;
  std::mutex id_mutex_;
  std::uint64_t request_counter_ = 0;
};

// ---------------------------------------------------------------------------
// Deterministic offline backend

struct MockConfig {
  std::uint64_t seed = 0;
  std::size_t embedding_dim = 256;
  std::string embedding_model = "mock-embedding";
};

class MockBackend : public LlmBackend {
 public:
  using Generator = std::function<std::string(std::uint64_t seed, const ChatRequest&)>;

  explicit MockBackend(MockConfig config = {});

  // Fixture key: SHA-256 over system prompt, a 0x1f separator, and user prompt.
  static std::string prompt_key(const ChatRequest& request);

  // Registers completions for a prompt; with several entries the request
  // seed picks one (seed mod count).
  void add_fixture(const std::string& key, std::vector<std::string> completions);
  // Replaces the seeded fallback generator used when no fixture matches.
  void set_fallback(Generator generator);

  ChatResponse chat_complete(const ChatRequest& request) override;
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  std::string embedding_model() const override { return config_.embedding_model; }
  std::size_t max_in_flight() const override { return 8; }

  std::uint64_t seed() const { return config_.seed; }
  // Hash of the whole request including decoding parameters.
  static std::uint64_t request_hash(const ChatRequest& request);

 private:
  MockConfig config_;
  std::map<std::string, std::vector<std::string>> fixtures_;
  Generator fallback_;
};

// The default fallback: recognizes the output schemas requested by the
// shipped prompts (advice JSON, contribution JSON, section summaries, prompt
// crossover) and fills them with text sampled from the user prompt.
std::string synthesize_completion(std::uint64_t seed, const ChatRequest& request);

// Seeded feature-hashing embedding; identical texts give identical vectors,
// and vectors of texts sharing words have positive cosine similarity.
EmbeddingVector hashed_embedding(std::string_view text, std::size_t dim, std::uint64_t seed);

}  // namespace hypadv::gateway

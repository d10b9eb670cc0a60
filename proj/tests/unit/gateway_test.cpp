#include <gtest/gtest.h>

#include <deque>

#include "hypadv/error.hpp"
#include "hypadv/gateway.hpp"

using namespace hypadv;
using namespace hypadv::gateway;

namespace {

// Replays scripted responses and records every call.
class ScriptedTransport : public Transport {
 public:
  std::deque<HttpResponse> script;
  std::vector<std::string> bodies;
  std::function<HttpResponse(const std::string&)> responder;

  HttpResponse post(const std::string&, const std::string& body, const Headers&, std::chrono::milliseconds) override {
    bodies.push_back(body);
    if (responder) return responder(body);
    if (script.empty()) return {500, "exhausted"};
    auto r = script.front();
    script.pop_front();
    return r;
  }
};

HttpBackendConfig test_config() {
  HttpBackendConfig c;
  c.base_url = "http://localhost:1/v1";
  c.api_key_env = "";
  c.embedding_model = "emb";
  c.retry.max_attempts = 5;
  return c;
}

}  // namespace

TEST(Gateway, ChatBodyCarriesDecodingParams) {
  ChatRequest r;
  r.model_name = "m";
  r.system_prompt = "sys";
  r.user_prompt = "usr";
  r.temperature = 0.6;
  r.top_p = 0.95;
  r.seed = 9;
  const auto body = chat_body(r);
  EXPECT_EQ(body["temperature"].get<double>(), 0.6);
  EXPECT_EQ(body["top_p"].get<double>(), 0.95);
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "usr");
  EXPECT_NE(body.dump().find("\"temperature\":0.6"), std::string::npos);
}

TEST(Gateway, ValidateRejectsOutOfRange) {
  ChatRequest r;
  r.top_p = 0.0;
  EXPECT_THROW(r.validate(), Error);
  r.top_p = 0.9;
  r.temperature = -1;
  EXPECT_THROW(r.validate(), Error);
}

TEST(Gateway, RetriesExhaustedAfterFive429s) {
  auto t = std::make_shared<ScriptedTransport>();
  for (int i = 0; i < 5; ++i) t->script.push_back({429, "slow down"});
  std::vector<std::chrono::milliseconds> sleeps;
  HttpBackend backend(test_config(), t, [&](auto d) { sleeps.push_back(d); });
  ChatRequest r;
  r.model_name = "m";
  try {
    backend.chat_complete(r);
    FAIL() << "expected a transport error";
  } catch (const TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("retries exhausted"), std::string::npos);
    EXPECT_EQ(e.status(), 429);
  }
  EXPECT_EQ(t->bodies.size(), 5u);
  EXPECT_EQ(sleeps.size(), 4u);
  for (std::size_t i = 1; i < sleeps.size(); ++i) EXPECT_LE(sleeps[i].count(), 16000);
}

TEST(Gateway, RecoversAfterTransientFailure) {
  auto t = std::make_shared<ScriptedTransport>();
  t->script.push_back({503, ""});
  t->script.push_back({0, ""});
  t->script.push_back({200, R"({"choices":[{"message":{"content":"hello"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}})"});
  HttpBackend backend(test_config(), t, [](auto) {});
  ChatRequest r;
  r.model_name = "m";
  const auto resp = backend.chat_complete(r);
  EXPECT_EQ(resp.text, "hello");
  EXPECT_EQ(resp.usage.prompt_tokens, 3);
  EXPECT_FALSE(resp.request_id.empty());
}

TEST(Gateway, NonRetryableStatusFailsImmediately) {
  auto t = std::make_shared<ScriptedTransport>();
  t->script.push_back({400, "bad request"});
  HttpBackend backend(test_config(), t, [](auto) {});
  ChatRequest r;
  r.model_name = "m";
  EXPECT_THROW(backend.chat_complete(r), TransportError);
  EXPECT_EQ(t->bodies.size(), 1u);
}

TEST(Gateway, EmbeddingBatchesSplitAtCap) {
  auto t = std::make_shared<ScriptedTransport>();
  t->responder = [](const std::string& body) {
    const auto j = json::parse(body);
    json data = json::array();
    // Reply out of order to check index handling.
    for (std::size_t i = j["input"].size(); i-- > 0;) {
      const double marker = std::stod(j["input"][i].get<std::string>());
      data.push_back({{"index", i}, {"embedding", {marker, 1.0}}});
    }
    return HttpResponse{200, json{{"data", data}}.dump()};
  };
  HttpBackend backend(test_config(), t, [](auto) {});
  std::vector<std::string> texts;
  for (int i = 0; i < 2048; ++i) texts.push_back(std::to_string(i));
  const auto vecs = backend.embed(texts);
  EXPECT_EQ(t->bodies.size(), 21u);
  ASSERT_EQ(vecs.size(), 2048u);
  for (int i = 0; i < 2048; ++i) EXPECT_EQ(vecs[static_cast<std::size_t>(i)].values[0], static_cast<float>(i));
}

TEST(Gateway, EmbedRejectsEmptyInput) {
  MockBackend mock;
  EXPECT_THROW(mock.embed(std::vector<std::string>{}), Error);
  EXPECT_THROW(mock.embed(std::vector<std::string>{"a", ""}), Error);
}

TEST(MockBackend, DeterministicCompletions) {
  MockBackend a({.seed = 4}), b({.seed = 4});
  ChatRequest r;
  r.system_prompt = "Reply with JSON keys abstract_summary etc";
  r.user_prompt = "Some paper text about graphs and sparse attention.";
  r.seed = 17;
  EXPECT_EQ(a.chat_complete(r).text, b.chat_complete(r).text);
  EXPECT_EQ(a.chat_complete(r).text, a.chat_complete(r).text);
}

TEST(MockBackend, FixturePickedBySeed) {
  MockBackend mock;
  ChatRequest r;
  r.system_prompt = "s";
  r.user_prompt = "u";
  mock.add_fixture(MockBackend::prompt_key(r), {"zero", "one"});
  r.seed = 0;
  EXPECT_EQ(mock.chat_complete(r).text, "zero");
  r.seed = 3;
  EXPECT_EQ(mock.chat_complete(r).text, "one");
}

TEST(MockBackend, EmbeddingsOrderedAndStable) {
  MockBackend mock({.seed = 1, .embedding_dim = 32});
  const std::vector<std::string> texts{"a", "b", "c", "a"};
  const auto v = mock.embed(texts);
  ASSERT_EQ(v.size(), 3u + 1u);
  EXPECT_EQ(v[0].values, v[3].values);
  EXPECT_NE(v[0].values, v[1].values);
  EXPECT_NEAR(v[2].norm(), 1.0, 1e-6);
}

TEST(MockBackend, SharedWordsGivePositiveCosine) {
  const auto a = hashed_embedding("graph neural network training", 128, 0);
  const auto b = hashed_embedding("graph neural network inference", 128, 0);
  double dot = 0;
  for (std::size_t i = 0; i < 128; ++i) dot += double(a.values[i]) * b.values[i];
  EXPECT_GT(dot, 0.3);
}

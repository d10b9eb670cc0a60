#include <gtest/gtest.h>

#include "hypadv/config.hpp"
#include "hypadv/error.hpp"
#include "test_util.hpp"

using namespace hypadv;
using namespace hypadv::config;

TEST(Config, DefaultsRoundTrip) {
  const auto c = from_json(default_json());
  EXPECT_EQ(c.backend, "mock");
  EXPECT_DOUBLE_EQ(c.alpha, 0.4);
  EXPECT_DOUBLE_EQ(c.lambda, 0.7);
  EXPECT_EQ(c.raft_k, 16u);
  EXPECT_EQ(c.retrieval_k, 10u);
  EXPECT_EQ(c.context_budget, 15000u);
  EXPECT_EQ(c.ga_top_k, 5u);
  EXPECT_DOUBLE_EQ(c.levenshtein_threshold, 0.8);
  EXPECT_DOUBLE_EQ(c.lcs_threshold, 0.3);
  EXPECT_DOUBLE_EQ(c.raft_decoding.temperature, 0.7);
  EXPECT_DOUBLE_EQ(c.raft_decoding.repetition_penalty, 1.05);
  EXPECT_EQ(c.trainer.command, std::vector<std::string>{"train"});
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(from_json(json{{"alhpa", 0.5}}), Error);
  EXPECT_THROW(from_json(json{{"endpoint", {{"baseurl", "x"}}}}), Error);
  EXPECT_THROW(from_json(json{{"alpha", "high"}}), Error);
  EXPECT_NO_THROW(from_json(json{{"paths", {{"anything", "/x"}}}}));
}

TEST(Config, EnvPatch) {
  const auto p = env_patch({{"HYPADV_BACKEND", "http"}, {"HYPADV_SEED", "9"}, {"HYPADV_BASE_URL", "http://h/v1"},
                            {"HYPADV_WORKERS", ""}, {"UNRELATED", "1"}});
  EXPECT_EQ(p, (json{{"backend", "http"}, {"seed", 9}, {"endpoint", {{"base_url", "http://h/v1"}}}}));
  EXPECT_THROW(env_patch({{"HYPADV_SEED", "-1"}}), Error);
}

TEST(Config, AssignmentPatch) {
  EXPECT_EQ(assignment_patch("alpha=0.2"), (json{{"alpha", 0.2}}));
  EXPECT_EQ(assignment_patch("models.advisor=my-model"), (json{{"models", {{"advisor", "my-model"}}}}));
  EXPECT_EQ(assignment_patch("trainer.command=[\"a\",\"b\"]"), (json{{"trainer", {{"command", {"a", "b"}}}}}));
  EXPECT_THROW(assignment_patch("novalue"), Error);
  EXPECT_THROW(assignment_patch("a..b=1"), Error);
}

TEST(Config, LayeringPrecedence) {
  testing_util::TempDir dir("config");
  write_text_file(dir.file("c.json"), R"({"seed": 1, "alpha": 0.3, "workers": 2})");
  const auto env = env_patch({{"HYPADV_SEED", "2"}, {"HYPADV_WORKERS", "3"}});
  const auto eff = layer(dir.file("c.json"), env, {assignment_patch("seed=3")});
  EXPECT_EQ(eff["seed"], 3);
  EXPECT_EQ(eff["workers"], 3);
  EXPECT_DOUBLE_EQ(eff["alpha"].get<double>(), 0.3);
  EXPECT_DOUBLE_EQ(eff["lambda"].get<double>(), 0.7);

  write_text_file(dir.file("bad.json"), R"({"lambada": 1})");
  EXPECT_THROW(layer(dir.file("bad.json"), json::object(), {}), Error);
  EXPECT_THROW(layer(std::nullopt, json::object(), {assignment_patch("nope=1")}), Error);
}

TEST(Config, HashIgnoresPaths) {
  auto a = default_json();
  auto b = a;
  b["paths"]["corpus"] = "/somewhere/else";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b["alpha"] = 0.5;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 64u);
}

TEST(Config, ShippedFileMatchesDefaults) {
  // Only model names and the endpoint differ from the built-in defaults.
  auto shipped = json::parse(read_text_file(std::string(HYPADV_TEST_DATA) + "/../../config/default.json"));
  EXPECT_NO_THROW(from_json(shipped));
  for (const auto& [role, name] : shipped["models"].items()) EXPECT_FALSE(name.get<std::string>().empty()) << role;
  auto d = default_json();
  shipped.erase("models");
  d.erase("models");
  shipped["endpoint"].erase("base_url");
  d["endpoint"].erase("base_url");
  EXPECT_EQ(shipped, d);
}

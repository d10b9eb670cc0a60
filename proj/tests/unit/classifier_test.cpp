#include <gtest/gtest.h>

#include <cmath>

#include "hypadv/classifier.hpp"
#include "hypadv/error.hpp"
#include "test_util.hpp"

using namespace hypadv;
using namespace hypadv::classifier;

namespace {

RatingDistribution one_hot(int r) {
  RatingDistribution d;
  d.probs[static_cast<std::size_t>(r - 1)] = 1.0;
  return d;
}

class FixedScorer : public ScoringBackend {
 public:
  explicit FixedScorer(RatingDistribution d) : d_(d) {}
  RatingDistribution predict(const ClassifierInput&) override { return d_; }
  std::string name() const override { return "fixed"; }

 private:
  RatingDistribution d_;
};

class StubTransport : public gateway::Transport {
 public:
  gateway::HttpResponse reply;
  std::string last_body;
  gateway::HttpResponse post(const std::string&, const std::string& body, const gateway::Headers&,
                             std::chrono::milliseconds) override {
    last_body = body;
    return reply;
  }
};

const ClassifierInput kInput{R"({"summary":"a sound idea"})", "abstract words", "contribution words"};

}  // namespace

TEST(Entropy, ClosedForms) {
  RatingDistribution uni;
  uni.probs.fill(0.1);
  EXPECT_NEAR(entropy(uni), std::log(10.0), 1e-12);
  EXPECT_EQ(entropy(one_hot(3)), 0.0);
  RatingDistribution two;
  two.probs[0] = two.probs[1] = 0.5;
  EXPECT_NEAR(entropy(two), 0.693147, 1e-6);
}

TEST(ExpectedRating, Examples) {
  EXPECT_DOUBLE_EQ(expected_rating(one_hot(7)), 7.0);
  RatingDistribution uni;
  uni.probs.fill(0.1);
  EXPECT_NEAR(expected_rating(uni), 5.5, 1e-12);
  RatingDistribution mix;
  mix.probs[5] = 0.2;
  mix.probs[6] = 0.8;
  EXPECT_NEAR(expected_rating(mix), 6.8, 1e-12);
}

TEST(Score, OneHotAndUniformBackends) {
  FixedScorer hot(one_hot(7));
  const auto p = score(kInput, hot);
  EXPECT_EQ(p.entropy, 0.0);
  EXPECT_DOUBLE_EQ(p.expected_rating, 7.0);
  RatingDistribution uni;
  uni.probs.fill(0.1);
  FixedScorer flat(uni);
  EXPECT_NEAR(score(kInput, flat).entropy, 2.302585, 1e-6);
}

TEST(Score, RejectsBadDistributionsAndInputs) {
  RatingDistribution bad;
  bad.probs[0] = 0.5;
  FixedScorer s(bad);
  EXPECT_THROW(score(kInput, s), Error);
  RatingDistribution neg = one_hot(2);
  neg.probs[3] = -0.1;
  neg.probs[1] = 1.1;
  EXPECT_THROW(validate_distribution(neg), Error);
  FixedScorer ok(one_hot(1));
  EXPECT_THROW(score({"", "a", "c"}, ok), Error);
}

TEST(ReferenceScorer, DeterministicAndNormalized) {
  auto a = ReferenceScorer::seeded(256, 9);
  auto b = ReferenceScorer::seeded(256, 9);
  const auto da = a.predict(kInput);
  EXPECT_EQ(da, b.predict(kInput));
  EXPECT_NEAR(da.sum(), 1.0, 1e-12);
  EXPECT_NE(da, ReferenceScorer::seeded(256, 10).predict(kInput));
}

TEST(ReferenceScorer, SaveLoadPreservesPredictions) {
  testing_util::TempDir dir("scorer");
  auto s = ReferenceScorer::seeded(64, 4);
  s.save(dir.file("w.txt"));
  auto back = ReferenceScorer::load(dir.file("w.txt"));
  EXPECT_EQ(back.dim(), 64u);
  const auto x = s.predict(kInput);
  const auto y = back.predict(kInput);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(x.probs[i], y.probs[i], 1e-15);
}

TEST(ReferenceScorer, FitLearnsSeparableTargets) {
  std::vector<TrainingExample> ex;
  for (int i = 0; i < 20; ++i) {
    const bool good = i % 2 == 0;
    ex.push_back({{good ? "excellent rigorous novel strong" : "weak flawed incremental unclear", "abstract " + std::to_string(i),
                   "contribution"},
                  one_hot(good ? 8 : 3)});
  }
  ReferenceScorer s(128);
  const double loss = s.fit(ex, {.epochs = 60, .learning_rate = 0.5, .l2 = 1e-4, .seed = 1});
  EXPECT_LT(loss, 1.0);
  EXPECT_GT(expected_rating(s.predict(ex[0].input)), 6.0);
  EXPECT_LT(expected_rating(s.predict(ex[1].input)), 5.0);
}

TEST(Featurize, UnitNormAndFieldSensitive) {
  const auto f = featurize(kInput, 512);
  double n = 0;
  for (double x : f) n += x * x;
  EXPECT_NEAR(n, 1.0, 1e-12);
  const ClassifierInput swapped{kInput.abstract, kInput.advice, kInput.contribution};
  EXPECT_NE(featurize(swapped, 512), f);
}

TEST(RemoteScorer, RequestAndResponseShape) {
  auto t = std::make_shared<StubTransport>();
  t->reply = {200, R"({"probs":[0,0,0,0,0,0,1,0,0,0]})"};
  RemoteScorer s("http://scorer/predict", t, {}, std::chrono::milliseconds(10), [](auto) {});
  EXPECT_EQ(s.predict(kInput), one_hot(7));
  const auto body = json::parse(t->last_body);
  EXPECT_EQ(body["abstract"], kInput.abstract);
  EXPECT_EQ(body["advice"], kInput.advice);
  t->reply = {200, R"({"probs":[1,0]})"};
  EXPECT_THROW(s.predict(kInput), Error);
}

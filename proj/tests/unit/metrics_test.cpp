#include <gtest/gtest.h>

#include "hypadv/error.hpp"
#include "hypadv/metrics.hpp"
#include "test_util.hpp"

using namespace hypadv;
using namespace hypadv::metrics;

namespace {

RankedPrediction row(const std::string& id, double er, double h, bool acc) { return {id, er, h, acc, std::nullopt}; }

// Ten rows ranked p0..p9 by expected rating; accepted flags as given.
std::vector<RankedPrediction> ten(const std::vector<bool>& accepted) {
  std::vector<RankedPrediction> rows;
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    rows.push_back(row("p" + std::to_string(i), 9.0 - 0.5 * static_cast<double>(i), 1.0, accepted[i]));
  }
  return rows;
}

}  // namespace

TEST(HeadSize, FloorWithFloorOfOne) {
  EXPECT_EQ(head_size(0.3, 10), 3u);
  EXPECT_EQ(head_size(0.05, 1000), 50u);
  EXPECT_EQ(head_size(0.1, 5), 1u);
  EXPECT_EQ(head_size(0.01, 1), 1u);
  EXPECT_EQ(head_size(1.0, 7), 7u);
}

TEST(TopkPrecision, WorkedExample) {
  // Top 3 of 10 hold two accepts.
  auto rows = ten({true, false, true, false, false, false, false, true, false, false});
  EXPECT_NEAR(topk_precision(rows, 0.3), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(topk_precision(rows, 1.0), 0.3, 1e-12);
}

TEST(TopkPrecision, SaturatesAtOne) {
  auto rows = ten({true, true, true, true, false, false, false, false, false, false});
  EXPECT_DOUBLE_EQ(topk_precision(rows, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(topk_precision(rows, 0.3), 1.0);
}

TEST(TopkPrecision, RejectsEmptyAndUnlabeled) {
  EXPECT_THROW(topk_precision({}, 0.1), Error);
  std::vector<RankedPrediction> rows{row("a", 5, 1, true)};
  rows.push_back({"b", 4, 1, std::nullopt, std::nullopt});
  EXPECT_THROW(topk_precision(rows, 0.5), Error);
}

TEST(RankOrder, TieBreaks) {
  std::vector<RankedPrediction> rows{row("c", 5, 1.0, true), row("b", 5, 0.5, true), row("a", 5, 1.0, true),
                                     row("d", 6, 2.0, true)};
  EXPECT_EQ(rank_order(rows), (std::vector<std::size_t>{3, 1, 2, 0}));
}

TEST(AcceptRecall, Examples) {
  auto rows = ten({true, false, false, true, false, false, false, false, false, false});
  EXPECT_DOUBLE_EQ(accept_recall(rows, 0.3), 0.5);
  auto perfect = ten({true, true, true, false, false, false, false, false, false, false});
  EXPECT_DOUBLE_EQ(accept_recall(perfect, 0.3), 1.0);
  // Head of 2 cannot hold 4 accepts.
  auto many = ten({true, true, true, true, false, false, false, false, false, false});
  EXPECT_DOUBLE_EQ(accept_recall(many, 0.2), 0.5);
}

TEST(AccuracyF1, Examples) {
  // 3 accept decisions, 2 correct, 4 actual accepts.
  const std::vector<bool> d{true, true, true, false, false, false};
  const std::vector<bool> l{true, true, false, true, true, false};
  const auto r = accuracy_f1(d, l);
  EXPECT_NEAR(r.accuracy, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.recall, 0.5, 1e-12);
  EXPECT_NEAR(r.f1, 2 * (2.0 / 3.0) * 0.5 / (2.0 / 3.0 + 0.5), 1e-12);

  const std::vector<bool> d2{true, true, true, true, true, false};
  const std::vector<bool> l2{true, true, true, false, false, true};
  const auto r2 = accuracy_f1(d2, l2);
  EXPECT_DOUBLE_EQ(r2.accuracy, 0.6);
  EXPECT_DOUBLE_EQ(r2.recall, 0.75);

  const auto p = accuracy_f1(l, l);
  EXPECT_DOUBLE_EQ(p.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(p.recall, 1.0);
  EXPECT_DOUBLE_EQ(p.f1, 1.0);
}

TEST(AccuracyF1, UndefinedRatiosThrow) {
  EXPECT_THROW(accuracy_f1({false, false}, {true, false}), Error);
  EXPECT_THROW(accuracy_f1({true, false}, {false, false}), Error);
  EXPECT_THROW(accuracy_f1({true}, {true, false}), Error);
}

TEST(EntropyGrid, ConfidentSubset) {
  // 20 rows; the two lowest-entropy rows are both accepts and rank lowest
  // overall, so the whole-set head misses them.
  std::vector<RankedPrediction> rows;
  for (int i = 0; i < 20; ++i) {
    rows.push_back(row("r" + std::to_string(i / 10) + std::to_string(i % 10), 8.0 - 0.1 * i, 2.0, i % 5 == 0));
  }
  rows[18].entropy = 0.1;
  rows[18].accepted = true;
  rows[19].entropy = 0.2;
  rows[19].accepted = true;
  const auto g = entropy_stratified_precision(rows, {0.1, 1.0}, {0.1, 0.5});
  ASSERT_EQ(g.cells.size(), 2u);
  EXPECT_DOUBLE_EQ(*g.cells[0][0], 1.0);
  EXPECT_DOUBLE_EQ(*g.cells[0][1], 1.0);
  EXPECT_DOUBLE_EQ(*g.cells[1][0], topk_precision(rows, 0.1));
  EXPECT_DOUBLE_EQ(*g.cells[1][1], topk_precision(rows, 0.5));
}

TEST(EntropyGrid, IdenticalEntropyMatchesUnstratified) {
  auto rows = ten({true, false, true, true, false, false, true, false, false, true});
  const auto g = entropy_stratified_precision(rows, {1.0}, {0.1, 0.2, 0.3});
  for (std::size_t r = 0; r < 3; ++r) EXPECT_DOUBLE_EQ(*g.cells[0][r], topk_precision(rows, g.ranking_fractions[r]));
}

TEST(RatingStats, VarianceAndHistogram) {
  const std::vector<double> same{5, 5, 5};
  EXPECT_DOUBLE_EQ(*rating_stats(same).variance, 0.0);
  const std::vector<double> two{4, 6};
  const auto s = rating_stats(two);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_DOUBLE_EQ(*s.variance, 1.0);
  const std::vector<double> one{7};
  EXPECT_FALSE(rating_stats(one).variance.has_value());

  const std::vector<double> edges{1.0, 9.5, 10.0, 10.0};
  const auto h = rating_stats(edges);
  ASSERT_EQ(h.histogram.size(), 18u);
  EXPECT_EQ(h.histogram.front().count, 1u);
  EXPECT_EQ(h.histogram.back().count, 3u);
  EXPECT_DOUBLE_EQ(h.histogram.back().hi, 10.0);
  EXPECT_THROW(rating_stats(std::vector<double>{}), Error);
}

TEST(Invariance, MonotoneTransformKeepsPrecision) {
  auto rows = ten({false, true, true, false, true, false, false, true, false, false});
  auto moved = rows;
  for (auto& r : moved) r.expected_rating = 3.0 * r.expected_rating * r.expected_rating + 1.0;
  for (double f : {0.1, 0.2, 0.3, 0.5}) EXPECT_DOUBLE_EQ(topk_precision(rows, f), topk_precision(moved, f));
  EXPECT_DOUBLE_EQ(topk_precision(rows, 1.0), 0.4);
  EXPECT_DOUBLE_EQ(accept_recall(rows, 1.0), 1.0);
}

TEST(Evaluate, ReportShapeAndMarkdown) {
  auto rows = ten({true, false, true, false, false, false, false, true, false, false});
  const auto rep = evaluate(rows);
  EXPECT_EQ(rep["count"], 10);
  EXPECT_DOUBLE_EQ(rep["acceptance_rate"].get<double>(), 0.3);
  EXPECT_NEAR(rep["topk_precision"]["top_30%"].get<double>(), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(rep["decisions"], "top_30%");
  EXPECT_NEAR(rep["accuracy"].get<double>(), 2.0 / 3.0, 1e-12);
  EXPECT_TRUE(rep.contains("entropy_grid"));
  const auto md = render_markdown(json::parse(rep.dump()));
  EXPECT_NE(md.find("| top_30% | 0.667 |"), std::string::npos);

  auto none = ten(std::vector<bool>(10, false));
  const auto rep2 = evaluate(none);
  EXPECT_TRUE(rep2["accuracy"].is_null());
  EXPECT_TRUE(rep2["accept_recall"]["value"].is_null());
  EXPECT_NE(render_markdown(json::parse(rep2.dump())).find("n/a"), std::string::npos);
}

TEST(Evaluate, ExplicitDecisions) {
  auto rows = ten({true, false, true, false, false, false, false, true, false, false});
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].decision = i == 7;
  const auto rep = evaluate(rows);
  EXPECT_EQ(rep["decisions"], "explicit");
  EXPECT_DOUBLE_EQ(rep["accuracy"].get<double>(), 1.0);
  EXPECT_NEAR(rep["recall"].get<double>(), 1.0 / 3.0, 1e-12);
}

TEST(LoadPredictions, ParsesAndReportsLine) {
  testing_util::TempDir dir("metrics");
  testing_util::write_lines(dir.file("p.jsonl"),
                            {R"({"paper_id":"a","expected_rating":6.5,"entropy":1.2,"accepted":true})",
                             R"({"paper_id":"b","expected_rating":4,"entropy":2,"accepted":null,"decision":false})"});
  const auto rows = load_predictions(dir.file("p.jsonl"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(*rows[0].accepted, true);
  EXPECT_FALSE(rows[1].accepted.has_value());
  EXPECT_EQ(*rows[1].decision, false);
  testing_util::write_lines(dir.file("bad.jsonl"), {R"({"paper_id":"a","expected_rating":6.5,"entropy":1})",
                                                    R"({"paper_id":"b"})"});
  try {
    load_predictions(dir.file("bad.jsonl"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
  }
}

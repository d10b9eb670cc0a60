#include <gtest/gtest.h>

#include "hypadv/error.hpp"
#include "hypadv/vector_index.hpp"
#include "test_util.hpp"

using namespace hypadv;
using namespace hypadv::index;
using corpus::Section;

namespace {

SectionIndex basis_index(std::size_t n) {
  SectionIndex idx(Section::kAbstract, "m", 8, 1700000000);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v(8, 0.0f);
    v[i % 8] = 1.0f;
    v[(i + 1) % 8] = 0.5f * static_cast<float>(i % 3);
    idx.add("id" + std::to_string(i), v, "text " + std::to_string(i));
  }
  return idx;
}

}  // namespace

TEST(VectorIndex, IdenticalVectorRanksFirst) {
  const auto idx = basis_index(5);
  const auto& target = idx.entries()[3];
  const auto res = idx.query(target.vector, "", {});
  ASSERT_FALSE(res.hits.empty());
  EXPECT_EQ(res.hits[0].paper_id, "id3");
  EXPECT_NEAR(res.hits[0].score, 1.0, 1e-6);
}

TEST(VectorIndex, OrthogonalQueryFallsBackToIdOrder) {
  SectionIndex idx(Section::kMethod, "m", 3);
  idx.add("b", {1, 0, 0}, "");
  idx.add("a", {1, 0, 0}, "");
  idx.add("c", {0, 1, 0}, "");
  const std::vector<float> q{0, 0, 1};
  const auto res = idx.query(q, "", {});
  ASSERT_EQ(res.hits.size(), 3u);
  EXPECT_EQ(res.hits[0].paper_id, "a");
  EXPECT_EQ(res.hits[1].paper_id, "b");
  EXPECT_EQ(res.hits[2].paper_id, "c");
  for (const auto& h : res.hits) EXPECT_NEAR(h.score, 0.0, 1e-9);
}

TEST(VectorIndex, ShortResult) {
  const auto idx = basis_index(5);
  QueryOptions opt;
  opt.k = 10;
  const auto res = idx.query(idx.entries()[0].vector, "", opt);
  EXPECT_EQ(res.hits.size(), 5u);
  EXPECT_TRUE(res.short_result);
}

TEST(VectorIndex, ExclusionAndAdmission) {
  const auto idx = basis_index(6);
  QueryOptions opt;
  opt.exclude_id = "id2";
  opt.admit = [](const std::string& id) { return id != "id4"; };
  const auto res = idx.query(idx.entries()[2].vector, "", opt);
  for (const auto& h : res.hits) {
    EXPECT_NE(h.paper_id, "id2");
    EXPECT_NE(h.paper_id, "id4");
  }
  EXPECT_EQ(res.hits.size(), 4u);
}

TEST(VectorIndex, InsertionChecks) {
  SectionIndex idx(Section::kAbstract, "m", 2);
  idx.add("a", {3, 4}, "");
  EXPECT_NEAR(idx.entries()[0].vector[0], 0.6f, 1e-6);
  EXPECT_THROW(idx.add("a", {1, 0}, ""), Error);
  EXPECT_THROW(idx.add("b", {1, 0, 0}, ""), Error);
  EXPECT_THROW(idx.query(std::vector<float>{1, 0, 0}, "", {}), Error);
}

TEST(VectorIndex, SaveLoadRoundTrip) {
  testing_util::TempDir dir("index");
  const auto idx = basis_index(7);
  idx.save(dir.file("a.index.jsonl"));
  const auto back = SectionIndex::load(dir.file("a.index.jsonl"));
  EXPECT_EQ(back.size(), 7u);
  EXPECT_EQ(back.model_name(), "m");
  EXPECT_EQ(back.build_timestamp(), 1700000000);
  EXPECT_EQ(back.section(), Section::kAbstract);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(back.entries()[i].vector, idx.entries()[i].vector);
    EXPECT_EQ(back.entries()[i].source_text, idx.entries()[i].source_text);
  }
}

TEST(VectorIndex, EncodeDecodeVector) {
  const std::vector<float> v{0.0f, -1.5f, 3.25f, 1e-7f};
  EXPECT_EQ(decode_vector(encode_vector(v)), v);
}

TEST(IndexBuild, SkipsRecordsWithoutSectionText) {
  corpus::CorpusStore store;
  store.add(testing_util::make_paper("a"));
  auto b = testing_util::make_paper("b");
  b.method_summary.clear();
  store.add(b);
  store.add(testing_util::make_paper("c"));
  gateway::MockBackend mock({.seed = 0, .embedding_dim = 16});
  BuildReport report;
  const auto method = build_index(store, Section::kMethod, mock, 0, &report);
  EXPECT_EQ(method.size(), 2u);
  EXPECT_EQ(report.skipped, 1u);
  const auto set = IndexSet::build(store, mock);
  EXPECT_EQ(set.at(Section::kAbstract).size(), 3u);
  EXPECT_EQ(set.at(Section::kMethod).size(), 2u);
}

TEST(IndexBuild, EmptyCorpusGivesEmptyIndex) {
  corpus::CorpusStore store;
  gateway::MockBackend mock({.seed = 0, .embedding_dim = 16});
  const auto idx = build_index(store, Section::kAbstract, mock);
  EXPECT_TRUE(idx.empty());
}

TEST(IndexBuild, QueryTopKFindsSelf) {
  corpus::CorpusStore store;
  for (int i = 0; i < 6; ++i) {
    auto p = testing_util::make_paper("p" + std::to_string(i));
    p.abstract = "topic" + std::to_string(i) + " unique words number " + std::to_string(i * 17);
    store.add(p);
  }
  gateway::MockBackend mock({.seed = 2, .embedding_dim = 64});
  testing_util::TempDir dir("indexset");
  IndexSet::build(store, mock).save(dir.path().string());
  const auto set = IndexSet::load(dir.path().string());
  const auto res = query_top_k(set.at(Section::kAbstract), mock, store.records()[4].abstract, {});
  ASSERT_FALSE(res.hits.empty());
  EXPECT_EQ(res.hits[0].paper_id, "p4");
  EXPECT_NEAR(res.hits[0].score, 1.0, 1e-5);
}

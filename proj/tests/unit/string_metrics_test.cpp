#include <gtest/gtest.h>

#include "hypadv/error.hpp"
#include "hypadv/string_metrics.hpp"

using namespace hypadv;
using namespace hypadv::evolver;

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein_distance("abc", "abc"), 0u);
  EXPECT_EQ(levenshtein_distance("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein_distance("", "abc"), 3u);
  EXPECT_EQ(levenshtein_distance("abc", ""), 3u);
  EXPECT_EQ(levenshtein_distance("flaw", "lawn"), 2u);
}

TEST(Lcs, Examples) {
  EXPECT_EQ(lcs_length("ABCBDAB", "BDCABA"), 4u);
  EXPECT_EQ(lcs_length("same text", "same text"), 9u);
  EXPECT_EQ(lcs_length("abc", "xyz"), 0u);
  EXPECT_EQ(lcs_length("the cat sat", "the dog sat", LcsUnit::kWhitespaceTokens), 2u);
  EXPECT_EQ(unit_length("a bb  ccc", LcsUnit::kWhitespaceTokens), 3u);
  EXPECT_EQ(unit_length("a bb", LcsUnit::kCharacters), 4u);
}

TEST(MatchScore, Identity) {
  const auto r = match_score("exact gold", "exact gold");
  EXPECT_TRUE(r.match);
  EXPECT_DOUBLE_EQ(r.levenshtein_similarity, 1.0);
  EXPECT_DOUBLE_EQ(r.lcs_ratio, 1.0);
}

TEST(MatchScore, LcsBoundaryAtPointThree) {
  // |gold| = 10, lcs = 3.
  const auto r = match_score("xxabcxxxxxxxxxxxxxxxxxxxxxxxxxxx", "abcdefghij");
  EXPECT_EQ(r.lcs, 3u);
  EXPECT_DOUBLE_EQ(r.lcs_ratio, 0.3);
  EXPECT_TRUE(r.match);
}

TEST(MatchScore, EmptyExtraction) {
  const auto r = match_score("", "abcdefghij");
  EXPECT_FALSE(r.match);
  EXPECT_DOUBLE_EQ(r.levenshtein_similarity, 0.0);
  EXPECT_DOUBLE_EQ(r.lcs_ratio, 0.0);
}

TEST(MatchScore, TokenUnit) {
  const auto r = match_score("we propose x", "we propose a new method for graphs today now", {}, LcsUnit::kWhitespaceTokens);
  EXPECT_EQ(r.lcs, 2u);
  EXPECT_NEAR(r.lcs_ratio, 2.0 / 9.0, 1e-12);
  EXPECT_FALSE(r.match);
}

TEST(MatchScore, EmptyGoldIsUsageError) { EXPECT_THROW(match_score("x", ""), Error); }

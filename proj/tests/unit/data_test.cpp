#include <gtest/gtest.h>

#include <set>

#include "spur/data.hpp"
#include "spur/error.hpp"

namespace spur {
namespace {

bool has_repeat(const TokenGrid& t, std::size_t row) {
  std::set<std::size_t> seen;
  for (std::size_t c = 0; c < t.cols; ++c)
    if (!seen.insert(t.at(row, c)).second) return true;
  return false;
}

TEST(DataTest, DuplicateTaskLabelsMatchContent) {
  const Dataset d = gen_duplicate_task(1, 500, 12, 24);
  ASSERT_EQ(d.size(), 500u);
  EXPECT_EQ(d.tokens.rows, 500u);
  EXPECT_EQ(d.tokens.cols, 12u);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(has_repeat(d.tokens, i), d.labels[i] == 1) << i;
    ones += d.labels[i];
    for (std::size_t c = 0; c < 12; ++c) EXPECT_LT(d.tokens.at(i, c), 24u);
  }
  EXPECT_EQ(ones, 250u);
  EXPECT_EQ(d.classes, 2u);
}

TEST(DataTest, ClassBalanceForOddCounts) {
  const Dataset d = gen_duplicate_task(2, 7, 4, 8);
  std::size_t ones = 0;
  for (auto l : d.labels) ones += l;
  EXPECT_LE(std::max(ones, 7 - ones) - std::min(ones, 7 - ones), 1u);
}

TEST(DataTest, DuplicateHasExactlyOneRepeatedToken) {
  const Dataset d = gen_duplicate_task(3, 200, 8, 20);
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::set<std::size_t> distinct;
    for (std::size_t c = 0; c < 8; ++c) distinct.insert(d.tokens.at(i, c));
    EXPECT_EQ(distinct.size(), d.labels[i] == 1 ? 7u : 8u);
  }
}

TEST(DataTest, GeneratorsAreDeterministic) {
  EXPECT_EQ(gen_duplicate_task(9, 100, 6, 10), gen_duplicate_task(9, 100, 6, 10));
  EXPECT_NE(gen_duplicate_task(9, 100, 6, 10), gen_duplicate_task(10, 100, 6, 10));
  EXPECT_EQ(gen_majority_task(9, 50, 5), gen_majority_task(9, 50, 5));
  EXPECT_EQ(gen_blobs(9, 50, 2, 3, 0.5), gen_blobs(9, 50, 2, 3, 0.5));
}

TEST(DataTest, TestSplitIsTheTail) {
  const Dataset d = gen_duplicate_task(4, 100, 6, 10, 0.2);
  for (std::size_t i = 0; i < 100; ++i)
    EXPECT_EQ(d.splits[i], i < 80 ? Split::kTrain : Split::kTest);
  const Dataset test = d.subset(Split::kTest);
  EXPECT_EQ(test.size(), 20u);
  EXPECT_EQ(test.tokens.at(0, 0), d.tokens.at(80, 0));
  EXPECT_EQ(test.labels[19], d.labels[99]);
  const std::vector<std::size_t> pick{5, 2};
  const Dataset sel = d.select(pick);
  EXPECT_EQ(sel.labels, (std::vector<std::size_t>{d.labels[5], d.labels[2]}));
}

TEST(DataTest, MajorityLabels) {
  const Dataset d = gen_majority_task(5, 200, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::size_t ones = 0;
    for (std::size_t c = 0; c < 3; ++c) ones += d.tokens.at(i, c);
    EXPECT_EQ(d.labels[i], ones >= 2 ? 1u : 0u);
  }
  EXPECT_THROW(gen_majority_task(5, 10, 4), ConfigError);
}

TEST(DataTest, BlobsWithoutSpreadSitOnTheirCentres) {
  const Dataset d = gen_blobs(6, 30, 2, 3, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t c = d.labels[i];
    EXPECT_EQ(c, i % 3);
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_EQ(d.features(i, j), j == c % 2 ? 4.0 * static_cast<double>(c) : 0.0);
  }
}

TEST(DataTest, InvalidArguments) {
  EXPECT_THROW(gen_duplicate_task(0, 10, 12, 12), ConfigError);
  EXPECT_THROW(gen_duplicate_task(0, 10, 1, 12), ConfigError);
  EXPECT_THROW(gen_duplicate_task(0, 10, 4, 12, 1.0), ConfigError);
  EXPECT_THROW(gen_blobs(0, 10, 2, 1, 1.0), ConfigError);
  EXPECT_THROW(parse_task_kind("sorting"), ConfigError);
  EXPECT_EQ(parse_task_kind(to_string(TaskKind::kBlobs)), TaskKind::kBlobs);
}

}  // namespace
}  // namespace spur

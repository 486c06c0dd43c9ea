#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "xdloc/error.h"
#include "xdloc/metrics.h"

namespace xdloc {
namespace {

// Ranking with the given image order.
RankedResult ranking(ImageId query, std::vector<ImageId> order) {
  RankedResult r;
  r.query_id = query;
  for (ImageId id : order) r.entries.push_back({id, 0.0, {}});
  return r;
}

// Image 0 placed at `rank` among n images.
RankedResult with_relevant_at(ImageId query, std::size_t rank, std::size_t n) {
  std::vector<ImageId> order(n - 1);
  std::iota(order.begin(), order.end(), 1);
  order.insert(order.begin() + static_cast<std::ptrdiff_t>(rank - 1), 0);
  return ranking(query, order);
}

TEST(Anr, RankSixteenOfTwoHundred) {
  const std::vector<RankedResult> r = {with_relevant_at(1, 16, 200)};
  RelevanceSpec rel;
  rel.relevant[1] = {0};
  EXPECT_EQ(best_relevant_rank(r[0], rel.relevant[1]), 16u);
  EXPECT_DOUBLE_EQ(anr(r, rel), 8.0);
  EXPECT_DOUBLE_EQ(anr(r, rel, 200), 8.0);
}

TEST(Anr, PerfectRanker) {
  std::vector<RankedResult> r;
  RelevanceSpec rel;
  for (ImageId q = 0; q < 5; ++q) {
    r.push_back(with_relevant_at(q, 1, 40));
    rel.relevant[q] = {0};
  }
  EXPECT_DOUBLE_EQ(anr(r, rel), 100.0 / 40.0);
  EXPECT_DOUBLE_EQ(mean_average_precision(r, rel), 1.0);
}

TEST(Anr, BestRankOverRelevantWindow) {
  const auto r = ranking(1, {5, 3, 9, 4});
  const std::vector<ImageId> rel = {4, 9};
  EXPECT_EQ(best_relevant_rank(r, rel), 3u);
}

TEST(Anr, RandomRankerAveragesHalf) {
  std::mt19937_64 rng(99);
  std::vector<RankedResult> r;
  RelevanceSpec rel;
  std::vector<ImageId> order(1000);
  std::iota(order.begin(), order.end(), 0);
  for (ImageId q = 0; q < 1000; ++q) {
    std::shuffle(order.begin(), order.end(), rng);
    r.push_back(ranking(q, order));
    rel.relevant[q] = {0};
  }
  EXPECT_NEAR(anr(r, rel), 50.0, 3.0);
}

TEST(AveragePrecision, Examples) {
  const auto r4 = with_relevant_at(1, 4, 10);
  EXPECT_EQ(average_precision(r4, std::vector<ImageId>{0}), 0.25);
  const auto r = ranking(1, {7, 2, 8, 3});
  EXPECT_NEAR(average_precision(r, std::vector<ImageId>{7, 8}), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
}

TEST(AveragePrecision, SingleRelevantIsReciprocalRank) {
  for (std::size_t k = 1; k <= 50; ++k) {
    EXPECT_EQ(average_precision(with_relevant_at(1, k, 50), std::vector<ImageId>{0}),
              1.0 / static_cast<double>(k));
  }
}

TEST(Metrics, Errors) {
  const auto r = ranking(1, {1, 2});
  EXPECT_THROW(best_relevant_rank(r, std::vector<ImageId>{}), Error);
  EXPECT_THROW(best_relevant_rank(r, std::vector<ImageId>{5}), Error);
  RelevanceSpec rel;
  const std::vector<RankedResult> rs = {r};
  EXPECT_THROW(anr(rs, rel), Error);
}

TEST(WindowRelevance, ClipsToDatabase) {
  EXPECT_EQ(window_relevance(1, 2, {0, 1, 2, 3, 4, 5}), (std::vector<ImageId>{0, 1, 2, 3}));
  EXPECT_EQ(window_relevance(4, 0, {0, 4}), (std::vector<ImageId>{4}));
}

}  // namespace
}  // namespace xdloc

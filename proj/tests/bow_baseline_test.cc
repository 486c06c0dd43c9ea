#include <gtest/gtest.h>

#include <random>

#include "test_util.h"
#include "xdloc/bow_baseline.h"
#include "xdloc/error.h"

namespace xdloc {
namespace {

ExperienceLibrary random_library(std::uint64_t seed, std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(seed);
  return ExperienceLibrary(dim, testing::random_int_vectors(rng, n, dim, 50),
                           std::vector<Provenance>(n));
}

TEST(TrainVocabulary, OneWordIsTheMean) {
  const auto lib = random_library(1, 101, 6);
  KMeansOptions opt;
  opt.num_words = 1;
  const auto vocab = train_vocabulary(lib, opt);
  ASSERT_EQ(vocab.size(), 1u);
  for (std::size_t j = 0; j < 6; ++j) {
    double sum = 0.0;
    for (LibraryId id = 1; id <= lib.size(); ++id) sum += lib.descriptor(id)[j];
    EXPECT_EQ(vocab.centroid(0)[j], static_cast<float>(sum / 101.0));
  }
}

TEST(TrainVocabulary, AsManyWordsAsPointsReproducesThem) {
  const auto lib = testing::library_from({{0, 0}, {5, 1}, {9, 9}, {2, 7}, {30, 3}});
  KMeansOptions opt;
  opt.num_words = 5;
  const auto vocab = train_vocabulary(lib, opt);
  std::vector<std::vector<float>> got, want;
  for (std::size_t w = 0; w < 5; ++w) {
    got.emplace_back(vocab.centroid(w).begin(), vocab.centroid(w).end());
    want.emplace_back(lib.descriptor(w + 1).begin(), lib.descriptor(w + 1).end());
  }
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  EXPECT_EQ(got, want);
}

TEST(TrainVocabulary, DeterministicAndObjectiveNonIncreasing) {
  const auto lib = random_library(2, 500, 8);
  KMeansOptions opt;
  opt.num_words = 20;
  opt.seed = 42;
  const auto a = train_vocabulary(lib, opt);
  opt.threads = 3;
  const auto b = train_vocabulary(lib, opt);
  EXPECT_TRUE(a == b);
  const auto h = a.objective_history();
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]);
  opt.seed = 43;
  EXPECT_FALSE(a == train_vocabulary(lib, opt));
}

TEST(TrainVocabulary, RejectsOversizedVocabulary) {
  const auto lib = random_library(3, 10, 4);
  KMeansOptions opt;
  opt.num_words = 11;
  EXPECT_THROW(train_vocabulary(lib, opt), Error);
}

TEST(VocabularyFile, RoundTrip) {
  const auto lib = random_library(4, 60, 5);
  KMeansOptions opt;
  opt.num_words = 7;
  const auto vocab = train_vocabulary(lib, opt);
  testing::TempDir dir;
  save_vocabulary(vocab, dir / "v.xdvw");
  EXPECT_TRUE(load_vocabulary(dir / "v.xdvw") == vocab);
}

TEST(BowRank, IdenticalImageScoresOne) {
  std::mt19937_64 rng(6);
  const auto lib = random_library(5, 400, 8);
  KMeansOptions opt;
  opt.num_words = 30;
  const auto vocab = train_vocabulary(lib, opt);
  std::vector<ImageRecord> db;
  for (int i = 0; i < 8; ++i) db.push_back(testing::random_image(rng, i, 25, 8, 50));
  ImageRecord q = db[5];
  q.image_id = 100;
  const auto r = bow_rank(q, db, vocab);
  ASSERT_EQ(r.entries.size(), 8u);
  EXPECT_EQ(r.entries[0].image_id, 5);
  EXPECT_NEAR(r.entries[0].score, 1.0, 1e-12);
}

TEST(BowRank, EmptyQueryOrdersById) {
  std::mt19937_64 rng(7);
  const auto lib = random_library(8, 100, 4);
  KMeansOptions opt;
  opt.num_words = 5;
  const auto vocab = train_vocabulary(lib, opt);
  std::vector<ImageRecord> db;
  for (int i : {4, 2, 9}) db.push_back(testing::random_image(rng, i, 5, 4, 50));
  ImageRecord q;
  const auto r = bow_rank(q, db, vocab);
  ASSERT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.entries[0].image_id, 2);
  EXPECT_EQ(r.entries[1].image_id, 4);
  EXPECT_EQ(r.entries[2].image_id, 9);
  for (const auto& e : r.entries) EXPECT_EQ(e.score, 0.0);
}

TEST(BowIndex, IdfDownweightsCommonWords) {
  // Two words; every image uses word 0, one image also uses word 1.
  const auto lib = testing::library_from({{0, 0}, {100, 100}});
  KMeansOptions opt;
  opt.num_words = 2;
  const auto vocab = train_vocabulary(lib, opt);
  std::vector<ImageRecord> db(3);
  for (int i = 0; i < 3; ++i) {
    db[i].image_id = i;
    db[i].features.push_back(testing::make_feature(0.5, 0.5, {1, 1}));
  }
  db[2].features.push_back(testing::make_feature(0.5, 0.5, {99, 99}));
  const BowIndex index(vocab, db);
  const auto words = vocab.quantize(db[2].features);
  const std::uint32_t common = words[0], rare = words[1];
  EXPECT_NEAR(index.idf(common), 1.0, 1e-15);
  EXPECT_NEAR(index.idf(rare), std::log(4.0 / 2.0) + 1.0, 1e-15);
}

}  // namespace
}  // namespace xdloc

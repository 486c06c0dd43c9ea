#include <gtest/gtest.h>

#include "xdloc/core_model.h"
#include "xdloc/error.h"

namespace xdloc {
namespace {

TEST(CellOf, InteriorPointAtLevelTwo) {
  EXPECT_EQ(cell_of({0.6, 0.3}, 2), 6u);
  EXPECT_EQ(cell_coords(6, 2), (GridCoord{2, 1}));
}

TEST(CellOf, UpperBoundaryClampsIntoLastCell) {
  EXPECT_EQ(cell_of({1.0, 1.0}, 1), 3u);
  EXPECT_EQ(cell_of({1.0, 0.0}, 2), 3u);
}

TEST(CellOf, LevelZeroIsSingleCell) {
  for (double x : {0.0, 0.25, 0.999, 1.0}) EXPECT_EQ(cell_of({x, 1.0 - x}, 0), 0u);
}

TEST(CellOf, AncestorsAgreeWithDirectComputation) {
  for (int i = 0; i <= 64; ++i) {
    for (int j = 0; j <= 64; ++j) {
      const Point p{i / 64.0, j / 64.0};
      const auto finest = cell_of(p, 3);
      for (int l = 0; l <= 3; ++l) EXPECT_EQ(ancestor_cell(finest, 3, l), cell_of(p, l));
    }
  }
}

TEST(CellBox, CoversItsCell) {
  const Box b = cell_box(6, 2);
  EXPECT_DOUBLE_EQ(b.x0, 0.5);
  EXPECT_DOUBLE_EQ(b.x1, 0.75);
  EXPECT_DOUBLE_EQ(b.y0, 0.25);
  EXPECT_DOUBLE_EQ(b.y1, 0.5);
  EXPECT_EQ(cell_index({2, 1}, 2), 6u);
}

TEST(PyramidConfig, TotalCells) {
  EXPECT_EQ(PyramidConfig{2}.total_cells(), 21u);
  EXPECT_EQ(PyramidConfig{0}.total_cells(), 1u);
  EXPECT_THROW(PyramidConfig{-1}.validate(), Error);
  EXPECT_THROW(PyramidConfig{kMaxPyramidLevels + 1}.validate(), Error);
}

TEST(MinerConfig, DefaultsAndValidation) {
  const MinerConfig cfg;
  EXPECT_EQ(cfg.k, 10);
  EXPECT_EQ(cfg.k_prime, 3);
  EXPECT_EQ(cfg.d0, 200.0);
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_THROW((MinerConfig{10, 3, 0.0}.validate()), Error);
  EXPECT_THROW((MinerConfig{2, 3, 200.0}.validate()), Error);
  EXPECT_THROW((MinerConfig{1, 0, 200.0}.validate()), Error);
}

TEST(Season, TokensRoundTrip) {
  for (auto s : {Season::kSpring, Season::kSummer, Season::kAutumn, Season::kWinter,
                 Season::kOther}) {
    EXPECT_EQ(parse_season(season_token(s)), s);
  }
  EXPECT_THROW(parse_season("FALL"), Error);
  EXPECT_EQ(domain_string({Season::kAutumn, 2}), "AU/2");
}

}  // namespace
}  // namespace xdloc

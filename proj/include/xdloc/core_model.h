#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xdloc {

using ImageId = std::int64_t;

// Library feature identifier. Valid ids are 1..V; 0 is reserved.
using LibraryId = std::uint32_t;

enum class Season : std::uint8_t {
  kSpring = 0,
  kSummer = 1,
  kAutumn = 2,
  kWinter = 3,
  kOther = 4,
};

inline constexpr int kNumSeasons = 5;

// "SP", "SU", "AU", "WI", "OTHER".
std::string_view season_token(Season season);
// Throws Error(kInvalidArgument) for unknown tokens.
Season parse_season(std::string_view token);

struct DomainLabel {
  Season season = Season::kOther;
  int route = 0;

  auto operator<=>(const DomainLabel&) const = default;
};

// "AU/1"
std::string domain_string(const DomainLabel& domain);

// Keypoint position normalized by image width/height; x right, y down.
struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

struct Feature {
  Point pos;
  // Carried through ingestion, unused by matching.
  float scale = 0.0f;
  float orientation = 0.0f;
  std::vector<float> desc;

  bool operator==(const Feature&) const = default;
};

struct ImageRecord {
  ImageId image_id = 0;
  std::vector<Feature> features;
  DomainLabel domain;
  std::optional<std::int64_t> place_id;

  bool operator==(const ImageRecord&) const = default;
};

struct MinerConfig {
  int k = 10;        // query neighbors
  int k_prime = 3;   // database neighbors
  double d0 = 200.0; // truncation distance, descriptor byte scale
  bool exclude_same_source = false;

  // Throws Error(kInvalidArgument) unless k >= k_prime >= 1 and d0 > 0.
  void validate() const;

  bool operator==(const MinerConfig&) const = default;
};

inline constexpr int kMaxPyramidLevels = 12;

struct PyramidConfig {
  int levels = 2;  // finest level L

  // Throws Error(kInvalidArgument) unless 0 <= levels <= kMaxPyramidLevels.
  void validate() const;

  // Σ_{l=0}^{L} 4^l, e.g. 21 for L = 2.
  std::uint32_t total_cells() const;

  bool operator==(const PyramidConfig&) const = default;
};

constexpr std::uint32_t grid_side(int level) { return 1u << level; }
constexpr std::uint32_t cells_at_level(int level) { return 1u << (2 * level); }

struct GridCoord {
  std::uint32_t x = 0;
  std::uint32_t y = 0;

  bool operator==(const GridCoord&) const = default;
};

// Axis-aligned box in normalized image coordinates.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  bool operator==(const Box&) const = default;
};

// Row-major index of the level-`level` grid cell containing `pos`.
// Coordinates equal to 1.0 fall into the last row/column.
std::uint32_t cell_of(Point pos, int level);

GridCoord cell_coords(std::uint32_t cell, int level);
std::uint32_t cell_index(GridCoord coord, int level);

// Cell at `to_level` (<= from_level) containing `cell` of `from_level`.
std::uint32_t ancestor_cell(std::uint32_t cell, int from_level, int to_level);

Box cell_box(std::uint32_t cell, int level);

}  // namespace xdloc

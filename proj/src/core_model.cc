#include "xdloc/core_model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "xdloc/error.h"

namespace xdloc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEmptyLibrary: return "empty_library";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kFingerprintMismatch: return "fingerprint_mismatch";
    case ErrorCode::kConfigMismatch: return "config_mismatch";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

std::string_view season_token(Season season) {
  switch (season) {
    case Season::kSpring: return "SP";
    case Season::kSummer: return "SU";
    case Season::kAutumn: return "AU";
    case Season::kWinter: return "WI";
    case Season::kOther: return "OTHER";
  }
  return "OTHER";
}

Season parse_season(std::string_view token) {
  for (int s = 0; s < kNumSeasons; ++s) {
    const auto season = static_cast<Season>(s);
    if (season_token(season) == token) return season;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown season token '" + std::string(token) + "'");
}

std::string domain_string(const DomainLabel& domain) {
  return std::string(season_token(domain.season)) + "/" +
         std::to_string(domain.route);
}

void MinerConfig::validate() const {
  if (k_prime < 1) {
    throw Error(ErrorCode::kInvalidArgument, "k_prime must be >= 1");
  }
  if (k < k_prime) {
    throw Error(ErrorCode::kInvalidArgument, "k must be >= k_prime");
  }
  if (!(d0 > 0.0) || !std::isfinite(d0)) {
    throw Error(ErrorCode::kInvalidArgument, "d0 must be positive");
  }
}

void PyramidConfig::validate() const {
  if (levels < 0 || levels > kMaxPyramidLevels) {
    throw Error(ErrorCode::kInvalidArgument,
                "pyramid levels must be in [0, " +
                    std::to_string(kMaxPyramidLevels) + "]");
  }
}

std::uint32_t PyramidConfig::total_cells() const {
  std::uint32_t total = 0;
  for (int l = 0; l <= levels; ++l) total += cells_at_level(l);
  return total;
}

namespace {

std::uint32_t grid_coordinate(double v, std::uint32_t side) {
  const double scaled = std::floor(v * static_cast<double>(side));
  if (scaled <= 0.0) return 0;
  return std::min(static_cast<std::uint32_t>(scaled), side - 1);
}

}  // namespace

std::uint32_t cell_of(Point pos, int level) {
  const std::uint32_t side = grid_side(level);
  return cell_index({grid_coordinate(pos.x, side), grid_coordinate(pos.y, side)},
                    level);
}

GridCoord cell_coords(std::uint32_t cell, int level) {
  const std::uint32_t side = grid_side(level);
  return {cell % side, cell / side};
}

std::uint32_t cell_index(GridCoord coord, int level) {
  return coord.y * grid_side(level) + coord.x;
}

std::uint32_t ancestor_cell(std::uint32_t cell, int from_level, int to_level) {
  if (to_level >= from_level) return cell;
  const int shift = from_level - to_level;
  const GridCoord c = cell_coords(cell, from_level);
  return cell_index({c.x >> shift, c.y >> shift}, to_level);
}

Box cell_box(std::uint32_t cell, int level) {
  const GridCoord c = cell_coords(cell, level);
  const double w = 1.0 / static_cast<double>(grid_side(level));
  return {c.x * w, c.y * w, (c.x + 1) * w, (c.y + 1) * w};
}

}  // namespace xdloc

#pragma once

#include <cstdint>

#include "xdloc/core_model.h"
#include "xdloc/dataset.h"

namespace xdloc {

// Appearance change applied when an image of a place is rendered in some
// domain. Identity when every field is zero.
struct DomainTransform {
  // Expected Euclidean norm of the additive Gaussian descriptor noise, in
  // byte units (per-component standard deviation noise_sigma / sqrt(d)).
  double noise_sigma = 30.0;
  double dropout = 0.1;      // probability a feature is not detected
  double replacement = 0.1;  // probability a feature is replaced by clutter
  double jitter = 0.01;      // keypoint position noise, normalized units

  bool operator==(const DomainTransform&) const = default;
};

// Synthetic cross-domain world. Route `route` holds the query/database places;
// every other route holds library-only places. Library images are rendered
// for every (season, route) class, so vocabulary filters select the
// cross-domain, cross-season, cross-route or full libraries.
struct SyntheticWorldConfig {
  int num_places = 100;
  int features_per_image = 50;
  int dim = 128;
  int num_patterns = 50;          // shared appearance prototypes
  double pattern_norm = 512.0;    // SIFT-like descriptor norm
  double place_variation = 30.0;  // norm of each place's offset from its prototype
  double season_gain = 0.3;       // per-component gain drawn from [1-g, 1+g] per season
  int num_routes = 3;
  int route = 0;
  Season query_season = Season::kSpring;
  Season database_season = Season::kAutumn;
  // Library images per (season, route) class on routes other than `route`;
  // traversals of `route` render each of its num_places places once.
  int library_images_per_domain = 40;
  // Query and database renders lose more features to occlusion and clutter
  // than the library traversals.
  DomainTransform query{30.0, 0.2, 0.4, 0.01};
  DomainTransform database{30.0, 0.2, 0.4, 0.01};
  DomainTransform library;
  // Database copies of each place with freshly drawn keypoint positions:
  // same appearance, different spatial layout.
  int layout_distractors = 0;
  int random_distractors = 0;
  int relevance_radius = 0;
  std::uint64_t seed = 1;

  // Throws Error(kInvalidArgument) for degenerate settings.
  void validate() const;

  // Query and database renders identical to their base place.
  static SyntheticWorldConfig noiseless();

  bool operator==(const SyntheticWorldConfig&) const = default;
};

// Database ids are place indices 0..num_places-1 followed by distractors; query
// ids are 1'000'000 + place; library ids start at 2'000'000. Deterministic in
// the seed.
Dataset generate_world(const SyntheticWorldConfig& cfg);

inline constexpr ImageId kQueryIdBase = 1'000'000;
inline constexpr ImageId kLibraryIdBase = 2'000'000;

}  // namespace xdloc

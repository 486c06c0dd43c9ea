#include "xdloc/synthetic_world.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "xdloc/error.h"

namespace xdloc {
namespace {

using Vec = std::vector<double>;

struct BaseFeature {
  Point pos;
  Vec desc;
};

using Place = std::vector<BaseFeature>;

class WorldBuilder {
 public:
  // Descriptor noise has its own stream so that worlds differing only in
  // noise level share every other random draw.
  explicit WorldBuilder(const SyntheticWorldConfig& cfg)
      : cfg_(cfg), rng_(cfg.seed), noise_rng_(cfg.seed ^ 0x9e3779b97f4a7c15ull) {
    for (int p = 0; p < cfg_.num_patterns; ++p) patterns_.push_back(make_pattern());
    for (int s = 0; s < kNumSeasons; ++s) {
      Vec gain(cfg_.dim);
      std::uniform_real_distribution<double> g(1.0 - cfg_.season_gain,
                                               1.0 + cfg_.season_gain);
      for (double& v : gain) v = g(rng_);
      gains_[s] = std::move(gain);
    }
  }

  Place make_place() {
    Place place;
    for (int f = 0; f < cfg_.features_per_image; ++f) place.push_back(make_feature());
    return place;
  }

  Place relocate(const Place& place) {
    Place moved = place;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& f : moved) f.pos = {u(rng_), u(rng_)};
    return moved;
  }

  ImageRecord render(const Place& place, ImageId id, DomainLabel domain,
                     const DomainTransform& t, std::optional<std::int64_t> place_id) {
    ImageRecord img;
    img.image_id = id;
    img.domain = domain;
    img.place_id = place_id;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double noise_scale = t.noise_sigma / std::sqrt(static_cast<double>(cfg_.dim));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1.0);
    const Vec& gain = gains_[static_cast<int>(domain.season)];
    for (const BaseFeature& base : place) {
      if (t.dropout > 0.0 && u(rng_) < t.dropout) continue;
      BaseFeature src = base;
      if (t.replacement > 0.0 && u(rng_) < t.replacement) src = make_feature();
      Feature f;
      f.pos = src.pos;
      if (t.jitter > 0.0) {
        f.pos.x = std::clamp(f.pos.x + t.jitter * jitter(rng_), 0.0, 1.0);
        f.pos.y = std::clamp(f.pos.y + t.jitter * jitter(rng_), 0.0, 1.0);
      }
      // Descriptor files store f32 coordinates.
      f.pos.x = static_cast<float>(f.pos.x);
      f.pos.y = static_cast<float>(f.pos.y);
      f.desc.resize(cfg_.dim);
      for (int j = 0; j < cfg_.dim; ++j) {
        double v = src.desc[j] * gain[j];
        if (t.noise_sigma > 0.0) v += noise_scale * noise(noise_rng_);
        f.desc[j] = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
      }
      img.features.push_back(std::move(f));
    }
    return img;
  }

 private:
  Vec make_pattern() {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(cfg_.dim);
    for (double& x : v) x = std::abs(n(rng_));
    normalize(v, cfg_.pattern_norm);
    for (double& x : v) x = std::min(x, 0.2 * cfg_.pattern_norm);
    normalize(v, cfg_.pattern_norm);
    return v;
  }

  BaseFeature make_feature() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, cfg_.num_patterns - 1);
    std::normal_distribution<double> n(0.0, 1.0);
    BaseFeature f;
    f.pos = {u(rng_), u(rng_)};
    f.desc = patterns_[pick(rng_)];
    Vec offset(cfg_.dim);
    for (double& x : offset) x = n(rng_);
    normalize(offset, cfg_.place_variation);
    for (int j = 0; j < cfg_.dim; ++j) f.desc[j] = std::max(0.0, f.desc[j] + offset[j]);
    return f;
  }

  static void normalize(Vec& v, double norm) {
    double s = 0.0;
    for (double x : v) s += x * x;
    if (s <= 0.0) return;
    const double scale = norm / std::sqrt(s);
    for (double& x : v) x *= scale;
  }

  const SyntheticWorldConfig& cfg_;
  std::mt19937_64 rng_;
  std::mt19937_64 noise_rng_;
  std::vector<Vec> patterns_;
  std::array<Vec, kNumSeasons> gains_;
};

void check_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be in [0, 1]");
  }
}

void check_transform(const DomainTransform& t) {
  check_rate(t.dropout, "dropout");
  check_rate(t.replacement, "replacement");
  if (!(t.noise_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise sigma must be non-negative");
  }
  if (!(t.jitter >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "jitter must be non-negative");
  }
}

}  // namespace

void SyntheticWorldConfig::validate() const {
  if (num_places < 1) {
    throw Error(ErrorCode::kInvalidArgument, "world needs at least one place");
  }
  if (features_per_image < 0 || dim < 1 || num_patterns < 1 || num_routes < 1 ||
      route < 0 || route >= num_routes || library_images_per_domain < 0 ||
      layout_distractors < 0 || random_distractors < 0 || relevance_radius < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid synthetic world size parameters");
  }
  if (query_season == Season::kOther || database_season == Season::kOther) {
    throw Error(ErrorCode::kInvalidArgument, "query/database seasons must be real seasons");
  }
  check_rate(season_gain, "season gain");
  check_transform(query);
  check_transform(database);
  check_transform(library);
}

SyntheticWorldConfig SyntheticWorldConfig::noiseless() {
  SyntheticWorldConfig cfg;
  cfg.season_gain = 0.0;
  cfg.query = {0.0, 0.0, 0.0, 0.0};
  cfg.database = cfg.query;
  return cfg;
}

Dataset generate_world(const SyntheticWorldConfig& cfg) {
  cfg.validate();
  WorldBuilder builder(cfg);
  Dataset world;

  std::vector<Place> places;
  for (int p = 0; p < cfg.num_places; ++p) places.push_back(builder.make_place());

  const DomainLabel query_domain{cfg.query_season, cfg.route};
  const DomainLabel database_domain{cfg.database_season, cfg.route};
  for (int p = 0; p < cfg.num_places; ++p) {
    world.database.push_back(
        builder.render(places[p], p, database_domain, cfg.database, p));
  }
  ImageId next_db = cfg.num_places;
  for (int p = 0; p < cfg.num_places; ++p) {
    for (int j = 0; j < cfg.layout_distractors; ++j) {
      world.database.push_back(builder.render(builder.relocate(places[p]), next_db++,
                                              database_domain, cfg.database,
                                              std::nullopt));
    }
  }
  for (int j = 0; j < cfg.random_distractors; ++j) {
    world.database.push_back(builder.render(builder.make_place(), next_db++,
                                            database_domain, cfg.database,
                                            std::nullopt));
  }

  std::vector<ImageId> place_ids(cfg.num_places);
  for (int p = 0; p < cfg.num_places; ++p) place_ids[p] = p;
  for (int p = 0; p < cfg.num_places; ++p) {
    world.queries.push_back(
        builder.render(places[p], kQueryIdBase + p, query_domain, cfg.query, p));
    world.relevance.relevant[kQueryIdBase + p] =
        window_relevance(p, cfg.relevance_radius, place_ids);
  }

  // Library traversals: every season of every route. Traversals of the query
  // route revisit all of its places; other routes get places of their own.
  ImageId next_lib = kLibraryIdBase;
  for (int r = 0; r < cfg.num_routes; ++r) {
    std::vector<Place> route_places;
    if (r == cfg.route) {
      route_places = places;
    } else {
      for (int i = 0; i < cfg.library_images_per_domain; ++i) {
        route_places.push_back(builder.make_place());
      }
    }
    for (int s = 0; s < 4; ++s) {
      const DomainLabel domain{static_cast<Season>(s), r};
      for (const Place& place : route_places) {
        world.library.push_back(
            builder.render(place, next_lib++, domain, cfg.library, std::nullopt));
      }
    }
  }
  return world;
}

}  // namespace xdloc

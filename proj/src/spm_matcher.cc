#include "xdloc/spm_matcher.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <string>

#include "xdloc/error.h"

namespace xdloc {
namespace {

void check_library(const SceneDescriptor& query, std::uint64_t fingerprint) {
  if (query.library_fingerprint != fingerprint) {
    throw Error(ErrorCode::kFingerprintMismatch,
                "query " + std::to_string(query.image_id) +
                    " was described against a different library");
  }
}

// Coordinates of a stored cell re-expressed at the scoring depth.
GridCoord coords_at(std::uint32_t cell, int from_level, int to_level) {
  GridCoord c = cell_coords(cell, from_level);
  const int shift = from_level - to_level;
  return {c.x >> shift, c.y >> shift};
}

// Deepest level (<= levels) at which the two cells coincide.
int common_depth(GridCoord a, GridCoord b, int levels) {
  const std::uint32_t diff = (a.x ^ b.x) | (a.y ^ b.y);
  return levels - static_cast<int>(std::bit_width(diff));
}

}  // namespace

double feature_similarity(const FeatureRecord& query, const FeatureRecord& database) {
  double best = 0.0;
  for (const WeightedEntry& q : query.entries) {
    for (const WeightedEntry& d : database.entries) {
      if (q.id == d.id) best = std::max(best, q.weight * d.weight);
    }
  }
  return best;
}

double level_weight(int level, int levels) {
  if (level == 0) return std::ldexp(1.0, -levels);
  return std::ldexp(1.0, -(levels - level + 1));
}

double pyramid_kernel(std::span<const double> level_similarities) {
  if (level_similarities.empty()) return 0.0;
  const int levels = static_cast<int>(level_similarities.size()) - 1;
  double k = 0.0;
  for (int l = 0; l <= levels; ++l) k += level_weight(l, levels) * level_similarities[l];
  return k;
}

std::optional<std::size_t> RankedResult::rank_of(ImageId image) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].image_id == image) return i + 1;
  }
  return std::nullopt;
}

void sort_ranking(std::vector<ScoredImage>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const ScoredImage& a, const ScoredImage& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.image_id < b.image_id;
            });
}

int SpmMatcher::scoring_levels(const SceneDescriptor& query,
                               std::optional<int> levels) const {
  const int l = levels.value_or(query.pyramid.levels);
  if (l < 0 || l > query.pyramid.levels || l > index_.pyramid().levels) {
    throw Error(ErrorCode::kConfigMismatch,
                "scoring depth " + std::to_string(l) + " exceeds query depth " +
                    std::to_string(query.pyramid.levels) + " or index depth " +
                    std::to_string(index_.pyramid().levels));
  }
  return l;
}

std::uint32_t SpmMatcher::ordinal_of(ImageId candidate) const {
  auto ordinal = index_.image_ordinal(candidate);
  if (!ordinal) {
    throw Error(ErrorCode::kNotFound,
                "image " + std::to_string(candidate) + " is not indexed");
  }
  return *ordinal;
}

RankedResult SpmMatcher::rank(const SceneDescriptor& query,
                              std::optional<int> levels) const {
  check_library(query, index_.library_fingerprint());
  const int depth = scoring_levels(query, levels);
  const int qdepth = query.pyramid.levels;
  const int idepth = index_.pyramid().levels;
  const std::size_t stride = static_cast<std::size_t>(depth) + 1;
  const std::size_t num_images = index_.images().size();

  std::vector<double> best(num_images * stride, 0.0);
  std::vector<double> total(num_images * stride, 0.0);
  std::vector<std::uint8_t> touched(num_images, 0);
  std::vector<std::uint32_t> touched_list;

  for (const FeatureRecord& f : query.features) {
    const GridCoord qc = coords_at(f.finest_cell, qdepth, depth);
    for (const WeightedEntry& e : f.entries) {
      // Entries are sorted by weight, so the first hit per (image, level) is
      // that level's maximum and later entries cannot raise it.
      if (e.weight <= 0.0) break;
      for (const Posting& p : index_.postings(e.id)) {
        const int m = common_depth(qc, coords_at(p.finest_cell, idepth, depth), depth);
        double* row = &best[p.image * stride];
        if (!touched[p.image]) {
          touched[p.image] = 1;
          touched_list.push_back(p.image);
        }
        for (int l = 0; l <= m; ++l) {
          if (row[l] == 0.0) row[l] = e.weight;
        }
      }
    }
    for (std::uint32_t img : touched_list) {
      for (std::size_t l = 0; l < stride; ++l) {
        total[img * stride + l] += best[img * stride + l];
        best[img * stride + l] = 0.0;
      }
      touched[img] = 0;
    }
    touched_list.clear();
  }

  RankedResult result;
  result.query_id = query.image_id;
  result.entries.reserve(num_images);
  const auto images = index_.images();
  for (std::size_t i = 0; i < num_images; ++i) {
    ScoredImage s;
    s.image_id = images[i].image_id;
    s.levels.assign(total.begin() + i * stride, total.begin() + (i + 1) * stride);
    s.score = pyramid_kernel(s.levels);
    result.entries.push_back(std::move(s));
  }
  sort_ranking(result.entries);
  return result;
}

std::vector<std::vector<double>> SpmMatcher::cell_similarities(
    const SceneDescriptor& query, std::uint32_t ordinal, int depth) const {
  const int qdepth = query.pyramid.levels;
  const int idepth = index_.pyramid().levels;
  std::vector<std::vector<double>> cells(depth + 1);
  for (int l = 0; l <= depth; ++l) cells[l].assign(cells_at_level(l), 0.0);

  std::vector<double> best(depth + 1);
  for (const FeatureRecord& f : query.features) {
    const GridCoord qc = coords_at(f.finest_cell, qdepth, depth);
    std::fill(best.begin(), best.end(), 0.0);
    for (const WeightedEntry& e : f.entries) {
      if (e.weight <= 0.0) break;
      const auto list = index_.postings(e.id);
      auto lo = std::lower_bound(
          list.begin(), list.end(), ordinal,
          [](const Posting& p, std::uint32_t v) { return p.image < v; });
      auto hi = std::upper_bound(
          lo, list.end(), ordinal,
          [](std::uint32_t v, const Posting& p) { return v < p.image; });
      for (auto it = lo; it != hi; ++it) {
        const int m = common_depth(qc, coords_at(it->finest_cell, idepth, depth), depth);
        for (int l = 0; l <= m; ++l) best[l] = std::max(best[l], e.weight);
      }
    }
    for (int l = 0; l <= depth; ++l) {
      const std::uint32_t cell = cell_index({qc.x >> (depth - l), qc.y >> (depth - l)}, l);
      cells[l][cell] += best[l];
    }
  }
  return cells;
}

std::vector<double> SpmMatcher::level_similarities(const SceneDescriptor& query,
                                                   ImageId candidate,
                                                   std::optional<int> levels) const {
  check_library(query, index_.library_fingerprint());
  const int depth = scoring_levels(query, levels);
  const auto cells = cell_similarities(query, ordinal_of(candidate), depth);
  std::vector<double> out;
  for (const auto& level : cells) {
    double s = 0.0;
    for (double v : level) s += v;
    out.push_back(s);
  }
  return out;
}

std::vector<SubimagePair> SpmMatcher::top_subimage_pairs(const SceneDescriptor& query,
                                                         ImageId candidate,
                                                         std::size_t n,
                                                         std::optional<int> levels) const {
  check_library(query, index_.library_fingerprint());
  const int depth = scoring_levels(query, levels);
  const auto cells = cell_similarities(query, ordinal_of(candidate), depth);
  std::vector<SubimagePair> pairs;
  for (int l = 0; l <= depth; ++l) {
    const double w = level_weight(l, depth);
    for (std::uint32_t c = 0; c < cells[l].size(); ++c) {
      pairs.push_back({l, c, cells[l][c], w * cells[l][c], cell_box(c, l)});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const SubimagePair& a, const SubimagePair& b) {
                     return a.weighted > b.weighted;
                   });
  pairs.resize(std::min(n, pairs.size()));
  return pairs;
}

double level_similarity(const SceneDescriptor& query, ImageId candidate, int level,
                        const InvertedIndex& index) {
  const auto levels = SpmMatcher(index).level_similarities(query, candidate);
  if (level < 0 || level >= static_cast<int>(levels.size())) {
    throw Error(ErrorCode::kInvalidArgument,
                "level " + std::to_string(level) + " outside the pyramid");
  }
  return levels[level];
}

std::uint64_t UsageHistogram::total() const {
  std::uint64_t t = 0;
  for (const auto& [query, row] : counts) {
    for (const auto& [lib, c] : row) t += c;
  }
  return t;
}

void UsageHistogram::write_table(std::ostream& out) const {
  out << "query_domain\tlibrary_domain\tcount\n";
  for (const auto& [query, row] : counts) {
    for (const auto& [lib, c] : row) {
      out << domain_string(query) << '\t' << domain_string(lib) << '\t' << c << '\n';
    }
  }
}

UsageHistogram explanation_histogram(std::span<const SceneDescriptor> queries,
                                     const ExperienceLibrary& library) {
  UsageHistogram hist;
  for (const SceneDescriptor& q : queries) {
    check_library(q, library.fingerprint());
    for (const FeatureRecord& f : q.features) {
      for (const WeightedEntry& e : f.entries) {
        ++hist.counts[q.domain][library.provenance(e.id).domain];
      }
    }
  }
  return hist;
}

}  // namespace xdloc

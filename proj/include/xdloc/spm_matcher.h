#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "xdloc/core_model.h"
#include "xdloc/experience_library.h"
#include "xdloc/inverted_index.h"
#include "xdloc/nn_descriptor.h"

namespace xdloc {

// Similarity of a query and a database feature: the largest query weight
// among library ids present in both entry sets (database weights are 1), or
// 0 when the sets are disjoint.
double feature_similarity(const FeatureRecord& query, const FeatureRecord& database);

// Kernel weight of level l in an L-level pyramid: 1/2^L for l = 0, otherwise
// 1/2^(L-l+1).
double level_weight(int level, int levels);

// Pyramid match kernel over per-level similarities I_0..I_L (L = size - 1).
double pyramid_kernel(std::span<const double> level_similarities);

struct ScoredImage {
  ImageId image_id = 0;
  double score = 0.0;
  std::vector<double> levels;  // I_0..I_L

  bool operator==(const ScoredImage&) const = default;
};

// Every database image exactly once, by descending score then ascending id.
struct RankedResult {
  ImageId query_id = 0;
  std::vector<ScoredImage> entries;

  // 1-based rank of `image`, if present.
  std::optional<std::size_t> rank_of(ImageId image) const;

  bool operator==(const RankedResult&) const = default;
};

// Orders entries by descending score, ties by ascending image id.
void sort_ranking(std::vector<ScoredImage>& entries);

struct SubimagePair {
  int level = 0;
  std::uint32_t cell = 0;
  double raw = 0.0;       // I_{l,cell}
  double weighted = 0.0;  // level_weight(l) * raw
  Box box;

  bool operator==(const SubimagePair&) const = default;
};

// Scores query descriptors against an inverted index with image-to-class
// nearest-neighbour similarity under the spatial pyramid kernel.
//
// `levels` selects the scoring depth; it defaults to the query's pyramid depth
// and must not exceed the query's or the index's depth. Coarser cells are
// derived from stored finest cells, so a depth-2 index answers depth-0
// (plain image-to-class) queries too.
class SpmMatcher {
 public:
  explicit SpmMatcher(const InvertedIndex& index) : index_(index) {}

  // Throws Error(kFingerprintMismatch) when the query was described against
  // a different library.
  RankedResult rank(const SceneDescriptor& query,
                    std::optional<int> levels = std::nullopt) const;

  // I_0..I_L for one indexed image. Throws Error(kNotFound) for unknown ids.
  std::vector<double> level_similarities(const SceneDescriptor& query,
                                         ImageId candidate,
                                         std::optional<int> levels = std::nullopt) const;

  // All cells of every level scored by their kernel-weighted contribution;
  // returns the best n (ties: coarser level, then lower cell index).
  std::vector<SubimagePair> top_subimage_pairs(
      const SceneDescriptor& query, ImageId candidate, std::size_t n = 5,
      std::optional<int> levels = std::nullopt) const;

 private:
  int scoring_levels(const SceneDescriptor& query, std::optional<int> levels) const;
  std::uint32_t ordinal_of(ImageId candidate) const;
  // Per-cell sums of per-feature maxima for one image, level-major.
  std::vector<std::vector<double>> cell_similarities(const SceneDescriptor& query,
                                                     std::uint32_t ordinal,
                                                     int levels) const;

  const InvertedIndex& index_;
};

double level_similarity(const SceneDescriptor& query, ImageId candidate, int level,
                        const InvertedIndex& index);

// Library usage by domain: for every query category, how many nearest
// neighbour entries resolve to library features of each domain class.
struct UsageHistogram {
  std::map<DomainLabel, std::map<DomainLabel, std::uint64_t>> counts;

  std::uint64_t total() const;
  // "query_domain\tlibrary_domain\tcount" rows.
  void write_table(std::ostream& out) const;
};

UsageHistogram explanation_histogram(std::span<const SceneDescriptor> queries,
                                     const ExperienceLibrary& library);

}  // namespace xdloc

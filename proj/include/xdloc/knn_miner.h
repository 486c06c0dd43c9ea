#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <unordered_set>
#include <vector>

#include "xdloc/core_model.h"
#include "xdloc/experience_library.h"

namespace xdloc {

struct Neighbor {
  LibraryId id = 0;
  double sq_distance = 0.0;

  bool operator==(const Neighbor&) const = default;
};

// Exact K nearest library features of one input feature, ascending by
// squared distance then library id.
using NNExplanation = std::vector<Neighbor>;

// Source images whose library features must never be returned.
using SourceExclusion = std::unordered_set<ImageId>;

// max(d0^2 - sq_distance, 0).
double truncated_similarity(double sq_distance, double d0);

class KnnMiner {
 public:
  explicit KnnMiner(const ExperienceLibrary& library) : library_(library) {}

  const ExperienceLibrary& library() const { return library_; }

  // Throws Error(kDimensionMismatch) for a wrong descriptor size and
  // Error(kInvalidArgument) when k exceeds the non-excluded library size.
  NNExplanation mine(std::span<const float> descriptor, int k,
                     const SourceExclusion* exclusion = nullptr) const;

  // One explanation per feature, in input order.
  std::vector<NNExplanation> mine_batch(std::span<const Feature> features, int k,
                                        const SourceExclusion* exclusion = nullptr,
                                        int threads = 1) const;

 private:
  const ExperienceLibrary& library_;
};

NNExplanation mine(const Feature& feature, const ExperienceLibrary& library, int k,
                   const SourceExclusion* exclusion = nullptr);

// Nearest-neighbour distances (Euclidean) of a feature set, sorted ascending.
struct ErrorProfile {
  std::vector<double> distances;

  // Normalized rank of sorted entry i, 100 * (i + 1) / n.
  double rank_percent(std::size_t i) const;
  // Nearest-rank percentile; p in [0, 100], p = 0 gives the minimum.
  double percentile(double p) const;
  // Percentiles 0, 10, ..., 100.
  std::vector<double> deciles() const;

  // "rank_percent\tdistance" rows for external plotting.
  void write_table(std::ostream& out) const;
};

ErrorProfile approx_error_profile(std::span<const Feature> features,
                                  const ExperienceLibrary& library,
                                  const SourceExclusion* exclusion = nullptr,
                                  int threads = 1);

}  // namespace xdloc

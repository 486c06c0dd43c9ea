#include "xdloc/knn_miner.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "xdloc/error.h"
#include "xdloc/exact_scan.h"

namespace xdloc {
namespace {

std::vector<std::uint8_t> exclusion_mask(const ExperienceLibrary& library,
                                         const SourceExclusion* exclusion,
                                         std::size_t* remaining) {
  *remaining = library.size();
  if (exclusion == nullptr || exclusion->empty()) return {};
  std::vector<std::uint8_t> mask(library.size(), 0);
  const auto prov = library.provenances();
  for (std::size_t i = 0; i < prov.size(); ++i) {
    if (exclusion->contains(prov[i].source_image)) {
      mask[i] = 1;
      --*remaining;
    }
  }
  return mask;
}

void check_k(int k, std::size_t remaining) {
  if (k < 1 || static_cast<std::size_t>(k) > remaining) {
    throw Error(ErrorCode::kInvalidArgument,
                "k = " + std::to_string(k) + " exceeds the " +
                    std::to_string(remaining) + " searchable library features");
  }
}

NNExplanation to_explanation(const std::vector<ScanHit>& hits) {
  NNExplanation out;
  out.reserve(hits.size());
  for (const auto& h : hits) {
    out.push_back({static_cast<LibraryId>(h.index + 1), h.sq_distance});
  }
  return out;
}

}  // namespace

double truncated_similarity(double sq_distance, double d0) {
  return std::max(d0 * d0 - sq_distance, 0.0);
}

NNExplanation KnnMiner::mine(std::span<const float> descriptor, int k,
                             const SourceExclusion* exclusion) const {
  if (descriptor.size() != library_.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "descriptor dimension " + std::to_string(descriptor.size()) +
                    " does not match library dimension " +
                    std::to_string(library_.dim()));
  }
  std::size_t remaining = 0;
  const auto mask = exclusion_mask(library_, exclusion, &remaining);
  check_k(k, remaining);
  const float* query = descriptor.data();
  auto hits = exact_knn(library_.data(), library_.dim(),
                        std::span<const float* const>(&query, 1),
                        static_cast<std::size_t>(k), mask);
  return to_explanation(hits.front());
}

std::vector<NNExplanation> KnnMiner::mine_batch(std::span<const Feature> features,
                                                int k,
                                                const SourceExclusion* exclusion,
                                                int threads) const {
  std::vector<const float*> queries;
  queries.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].desc.size() != library_.dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "feature " + std::to_string(i) + " has dimension " +
                      std::to_string(features[i].desc.size()) +
                      ", library dimension is " + std::to_string(library_.dim()));
    }
    queries.push_back(features[i].desc.data());
  }
  std::vector<NNExplanation> out(features.size());
  if (features.empty()) return out;
  std::size_t remaining = 0;
  const auto mask = exclusion_mask(library_, exclusion, &remaining);
  check_k(k, remaining);
  auto hits = exact_knn(library_.data(), library_.dim(), queries,
                        static_cast<std::size_t>(k), mask, threads);
  for (std::size_t i = 0; i < hits.size(); ++i) out[i] = to_explanation(hits[i]);
  return out;
}

NNExplanation mine(const Feature& feature, const ExperienceLibrary& library, int k,
                   const SourceExclusion* exclusion) {
  return KnnMiner(library).mine(feature.desc, k, exclusion);
}

double ErrorProfile::rank_percent(std::size_t i) const {
  return 100.0 * static_cast<double>(i + 1) / static_cast<double>(distances.size());
}

double ErrorProfile::percentile(double p) const {
  if (distances.empty()) return 0.0;
  if (p <= 0.0) return distances.front();
  const double n = static_cast<double>(distances.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, distances.size());
  return distances[rank - 1];
}

std::vector<double> ErrorProfile::deciles() const {
  std::vector<double> out;
  for (int p = 0; p <= 100; p += 10) out.push_back(percentile(p));
  return out;
}

void ErrorProfile::write_table(std::ostream& out) const {
  out << "rank_percent\tdistance\n";
  for (std::size_t i = 0; i < distances.size(); ++i) {
    out << rank_percent(i) << '\t' << distances[i] << '\n';
  }
}

ErrorProfile approx_error_profile(std::span<const Feature> features,
                                  const ExperienceLibrary& library,
                                  const SourceExclusion* exclusion, int threads) {
  ErrorProfile profile;
  const auto nn = KnnMiner(library).mine_batch(features, 1, exclusion, threads);
  profile.distances.reserve(nn.size());
  for (const auto& e : nn) profile.distances.push_back(std::sqrt(e.front().sq_distance));
  std::sort(profile.distances.begin(), profile.distances.end());
  return profile;
}

}  // namespace xdloc

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "xdloc/core_model.h"
#include "xdloc/experience_library.h"
#include "xdloc/knn_miner.h"

namespace xdloc {

enum class DescriptorRole : std::uint8_t { kQuery = 0, kDatabase = 1 };

struct WeightedEntry {
  LibraryId id = 0;
  double weight = 0.0;

  bool operator==(const WeightedEntry&) const = default;
};

// One feature explained by library ids. Entries are sorted by descending
// weight then ascending id. Query weights are truncated similarities (zero
// allowed); database weights are always 1.
struct FeatureRecord {
  Point pos;
  std::uint32_t finest_cell = 0;
  std::vector<WeightedEntry> entries;

  bool operator==(const FeatureRecord&) const = default;
};

// Sparse nearest-neighbour scene descriptor: one record per image feature, in
// feature order. Conceptually a set of N sparse V-dimensional vectors, each
// tagged with its finest pyramid cell.
struct SceneDescriptor {
  ImageId image_id = 0;
  DomainLabel domain;
  std::optional<std::int64_t> place_id;
  DescriptorRole role = DescriptorRole::kQuery;
  PyramidConfig pyramid;
  std::uint64_t library_fingerprint = 0;
  std::vector<FeatureRecord> features;

  bool operator==(const SceneDescriptor&) const = default;
};

SceneDescriptor describe_query(const ImageRecord& image, const KnnMiner& miner,
                               const MinerConfig& cfg, const PyramidConfig& pyr,
                               int threads = 1);
SceneDescriptor describe_database(const ImageRecord& image, const KnnMiner& miner,
                                  const MinerConfig& cfg, const PyramidConfig& pyr,
                                  int threads = 1);

SceneDescriptor describe_query(const ImageRecord& image,
                               const ExperienceLibrary& library,
                               const MinerConfig& cfg, const PyramidConfig& pyr);
SceneDescriptor describe_database(const ImageRecord& image,
                                  const ExperienceLibrary& library,
                                  const MinerConfig& cfg, const PyramidConfig& pyr);

// Describes many images; parallel over images, output in input order.
std::vector<SceneDescriptor> describe_all(std::span<const ImageRecord> images,
                                          DescriptorRole role,
                                          const KnnMiner& miner,
                                          const MinerConfig& cfg,
                                          const PyramidConfig& pyr, int threads = 1);

}  // namespace xdloc

#include "xdloc/nn_descriptor.h"

#include <algorithm>

#include "xdloc/parallel.h"

namespace xdloc {
namespace {

SceneDescriptor describe(const ImageRecord& image, DescriptorRole role,
                         const KnnMiner& miner, const MinerConfig& cfg,
                         const PyramidConfig& pyr, int threads) {
  cfg.validate();
  pyr.validate();
  SceneDescriptor out;
  out.image_id = image.image_id;
  out.domain = image.domain;
  out.place_id = image.place_id;
  out.role = role;
  out.pyramid = pyr;
  out.library_fingerprint = miner.library().fingerprint();
  if (image.features.empty()) return out;

  SourceExclusion self;
  if (cfg.exclude_same_source) self.insert(image.image_id);
  const int k = role == DescriptorRole::kQuery ? cfg.k : cfg.k_prime;
  const auto explanations =
      miner.mine_batch(image.features, k, self.empty() ? nullptr : &self, threads);

  out.features.reserve(image.features.size());
  for (std::size_t i = 0; i < image.features.size(); ++i) {
    FeatureRecord rec;
    rec.pos = image.features[i].pos;
    rec.finest_cell = cell_of(rec.pos, pyr.levels);
    rec.entries.reserve(explanations[i].size());
    for (const Neighbor& nb : explanations[i]) {
      const double w = role == DescriptorRole::kQuery
                           ? truncated_similarity(nb.sq_distance, cfg.d0)
                           : 1.0;
      rec.entries.push_back({nb.id, w});
    }
    std::sort(rec.entries.begin(), rec.entries.end(),
              [](const WeightedEntry& a, const WeightedEntry& b) {
                if (a.weight != b.weight) return a.weight > b.weight;
                return a.id < b.id;
              });
    out.features.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

SceneDescriptor describe_query(const ImageRecord& image, const KnnMiner& miner,
                               const MinerConfig& cfg, const PyramidConfig& pyr,
                               int threads) {
  return describe(image, DescriptorRole::kQuery, miner, cfg, pyr, threads);
}

SceneDescriptor describe_database(const ImageRecord& image, const KnnMiner& miner,
                                  const MinerConfig& cfg, const PyramidConfig& pyr,
                                  int threads) {
  return describe(image, DescriptorRole::kDatabase, miner, cfg, pyr, threads);
}

SceneDescriptor describe_query(const ImageRecord& image,
                               const ExperienceLibrary& library,
                               const MinerConfig& cfg, const PyramidConfig& pyr) {
  return describe_query(image, KnnMiner(library), cfg, pyr);
}

SceneDescriptor describe_database(const ImageRecord& image,
                                  const ExperienceLibrary& library,
                                  const MinerConfig& cfg, const PyramidConfig& pyr) {
  return describe_database(image, KnnMiner(library), cfg, pyr);
}

std::vector<SceneDescriptor> describe_all(std::span<const ImageRecord> images,
                                          DescriptorRole role,
                                          const KnnMiner& miner,
                                          const MinerConfig& cfg,
                                          const PyramidConfig& pyr, int threads) {
  std::vector<SceneDescriptor> out(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    out[i] = describe(images[i], role, miner, cfg, pyr, 1);
  });
  return out;
}

}  // namespace xdloc

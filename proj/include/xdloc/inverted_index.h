#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "xdloc/core_model.h"
#include "xdloc/experience_library.h"
#include "xdloc/nn_descriptor.h"

namespace xdloc {

// One database feature that listed a library id among its K' neighbours.
// `image` is the ordinal of the image in the index's image table, which is
// sorted by image id.
struct Posting {
  std::uint32_t image = 0;
  std::uint32_t finest_cell = 0;
  std::uint32_t feature_ordinal = 0;

  auto operator<=>(const Posting&) const = default;
};

struct IndexedImage {
  ImageId image_id = 0;
  std::uint32_t num_features = 0;
  std::optional<std::int64_t> place_id;
  DomainLabel domain;

  bool operator==(const IndexedImage&) const = default;
};

// Inverted file from library id to database postings. Immutable after build
// or load; safe for concurrent readers.
class InvertedIndex {
 public:
  // All descriptors must be DATABASE descriptors built against `library` with
  // the same pyramid. Throws Error(kConfigMismatch / kFingerprintMismatch /
  // kDuplicateId) otherwise.
  static InvertedIndex build(std::span<const SceneDescriptor> databases,
                             const ExperienceLibrary& library,
                             const MinerConfig& miner,
                             const PyramidConfig& pyramid);

  // Postings of library id `id` (1..V), sorted by (image, cell, ordinal).
  std::span<const Posting> postings(LibraryId id) const {
    return {postings_.data() + offsets_[id - 1], postings_.data() + offsets_[id]};
  }

  std::span<const IndexedImage> images() const { return images_; }
  std::optional<std::uint32_t> image_ordinal(ImageId id) const;

  std::uint64_t vocabulary_size() const { return vocabulary_size_; }
  std::uint32_t dim() const { return dim_; }
  const PyramidConfig& pyramid() const { return pyramid_; }
  const MinerConfig& miner() const { return miner_; }
  std::uint64_t library_fingerprint() const { return library_fingerprint_; }
  std::uint64_t total_postings() const { return postings_.size(); }

  // Hash over the full logical contents.
  std::uint64_t content_hash() const;

  bool operator==(const InvertedIndex&) const = default;

 private:
  friend void save_index(const InvertedIndex&, const std::filesystem::path&);
  friend InvertedIndex load_index(const std::filesystem::path&,
                                  std::optional<std::uint64_t>);

  InvertedIndex() = default;

  std::uint64_t vocabulary_size_ = 0;
  std::uint32_t dim_ = 0;
  PyramidConfig pyramid_;
  MinerConfig miner_;
  std::uint64_t library_fingerprint_ = 0;
  std::vector<IndexedImage> images_;
  std::vector<std::uint64_t> offsets_;  // V + 1 entries
  std::vector<Posting> postings_;
};

inline InvertedIndex build_index(std::span<const SceneDescriptor> databases,
                                 const ExperienceLibrary& library,
                                 const MinerConfig& miner,
                                 const PyramidConfig& pyramid) {
  return InvertedIndex::build(databases, library, miner, pyramid);
}

// "XDIX" little-endian file:
//   magic "XDIX" | version u32 | V u64 | L u8 | d u32 | fingerprint u64 |
//   flags u32 | K u32 | K' u32 | D0 f64 |
//   image count u64 | per image: id i64, N u32, has_place u8, place i64,
//                                season u8, route i32 |
//   per library id 1..V: count u32, count x (image u32, cell u32, ordinal u32)
// flags bit 0 (delta-coded image ordinals) is reserved and never set by this
// writer; readers reject unknown flags.
void save_index(const InvertedIndex& index, const std::filesystem::path& path);

// Throws Error(kFormat) on bad magic/version/flags, Error(kTruncated) on short
// files and Error(kFingerprintMismatch) when `expected_fingerprint` is given
// and differs from the stored library fingerprint.
InvertedIndex load_index(const std::filesystem::path& path,
                         std::optional<std::uint64_t> expected_fingerprint = {});

}  // namespace xdloc

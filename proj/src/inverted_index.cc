#include "xdloc/inverted_index.h"

#include <algorithm>
#include <string>

#include "xdloc/binary_io.h"
#include "xdloc/error.h"

namespace xdloc {
namespace {

constexpr std::uint32_t kIndexFormatVersion = 1;
constexpr std::uint32_t kKnownFlags = 0;

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = kDigits[v & 0xf];
  return s;
}

}  // namespace

InvertedIndex InvertedIndex::build(std::span<const SceneDescriptor> databases,
                                   const ExperienceLibrary& library,
                                   const MinerConfig& miner,
                                   const PyramidConfig& pyramid) {
  miner.validate();
  pyramid.validate();
  InvertedIndex index;
  index.vocabulary_size_ = library.size();
  index.dim_ = static_cast<std::uint32_t>(library.dim());
  index.pyramid_ = pyramid;
  index.miner_ = miner;
  index.library_fingerprint_ = library.fingerprint();

  std::vector<std::size_t> order(databases.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return databases[a].image_id < databases[b].image_id;
  });

  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const SceneDescriptor& d = databases[order[pos]];
    if (pos > 0 && databases[order[pos - 1]].image_id == d.image_id) {
      throw Error(ErrorCode::kDuplicateId,
                  "duplicate database image id " + std::to_string(d.image_id));
    }
    if (d.role != DescriptorRole::kDatabase) {
      throw Error(ErrorCode::kConfigMismatch,
                  "image " + std::to_string(d.image_id) +
                      " is not a database descriptor");
    }
    if (d.library_fingerprint != index.library_fingerprint_) {
      throw Error(ErrorCode::kFingerprintMismatch,
                  "image " + std::to_string(d.image_id) +
                      " was described against a different library");
    }
    if (!(d.pyramid == pyramid)) {
      throw Error(ErrorCode::kConfigMismatch,
                  "image " + std::to_string(d.image_id) +
                      " uses a different pyramid configuration");
    }
    index.images_.push_back({d.image_id, static_cast<std::uint32_t>(d.features.size()),
                             d.place_id, d.domain});
  }

  // Counting sort into CSR layout. Images are visited in id order and
  // features in ordinal order, so each list comes out sorted by
  // (image, ordinal); cells are then ordered within an image.
  std::vector<std::uint64_t> counts(index.vocabulary_size_ + 1, 0);
  const std::uint32_t max_cell = cells_at_level(pyramid.levels);
  for (const SceneDescriptor& d : databases) {
    for (const FeatureRecord& f : d.features) {
      if (f.finest_cell >= max_cell) {
        throw Error(ErrorCode::kConfigMismatch,
                    "finest cell out of range in image " + std::to_string(d.image_id));
      }
      for (const WeightedEntry& e : f.entries) {
        if (e.id == 0 || e.id > index.vocabulary_size_) {
          throw Error(ErrorCode::kConfigMismatch,
                      "library id " + std::to_string(e.id) + " out of range");
        }
        ++counts[e.id];
      }
    }
  }
  index.offsets_.assign(index.vocabulary_size_ + 1, 0);
  for (std::uint64_t id = 1; id <= index.vocabulary_size_; ++id) {
    index.offsets_[id] = index.offsets_[id - 1] + counts[id];
  }
  index.postings_.resize(index.offsets_.back());
  std::vector<std::uint64_t> cursor(index.offsets_.begin(), index.offsets_.end() - 1);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const SceneDescriptor& d = databases[order[pos]];
    for (std::size_t f = 0; f < d.features.size(); ++f) {
      const FeatureRecord& rec = d.features[f];
      for (const WeightedEntry& e : rec.entries) {
        index.postings_[cursor[e.id - 1]++] = {static_cast<std::uint32_t>(pos),
                                               rec.finest_cell,
                                               static_cast<std::uint32_t>(f)};
      }
    }
  }
  for (std::uint64_t id = 0; id < index.vocabulary_size_; ++id) {
    std::sort(index.postings_.begin() + index.offsets_[id],
              index.postings_.begin() + index.offsets_[id + 1]);
  }
  return index;
}

std::optional<std::uint32_t> InvertedIndex::image_ordinal(ImageId id) const {
  auto it = std::lower_bound(images_.begin(), images_.end(), id,
                             [](const IndexedImage& img, ImageId v) {
                               return img.image_id < v;
                             });
  if (it == images_.end() || it->image_id != id) return std::nullopt;
  return static_cast<std::uint32_t>(it - images_.begin());
}

std::uint64_t InvertedIndex::content_hash() const {
  Fingerprint64 fp;
  fp.update_value(vocabulary_size_);
  fp.update_value(dim_);
  fp.update_value(pyramid_.levels);
  fp.update_value(miner_.k);
  fp.update_value(miner_.k_prime);
  fp.update_value(miner_.d0);
  fp.update_value(library_fingerprint_);
  for (const auto& img : images_) {
    fp.update_value(img.image_id);
    fp.update_value(img.num_features);
    fp.update_value(img.place_id.value_or(-1));
    fp.update_value(static_cast<int>(img.domain.season));
    fp.update_value(img.domain.route);
  }
  fp.update(std::as_bytes(std::span<const std::uint64_t>(offsets_)));
  for (const auto& p : postings_) {
    fp.update_value(p.image);
    fp.update_value(p.finest_cell);
    fp.update_value(p.feature_ordinal);
  }
  return fp.value();
}

void save_index(const InvertedIndex& index, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic("XDIX");
  w.u32(kIndexFormatVersion);
  w.u64(index.vocabulary_size_);
  w.u8(static_cast<std::uint8_t>(index.pyramid_.levels));
  w.u32(index.dim_);
  w.u64(index.library_fingerprint_);
  w.u32(0);  // flags
  w.u32(static_cast<std::uint32_t>(index.miner_.k));
  w.u32(static_cast<std::uint32_t>(index.miner_.k_prime));
  w.f64(index.miner_.d0);
  w.u64(index.images_.size());
  for (const auto& img : index.images_) {
    w.i64(img.image_id);
    w.u32(img.num_features);
    w.u8(img.place_id.has_value() ? 1 : 0);
    w.i64(img.place_id.value_or(0));
    w.u8(static_cast<std::uint8_t>(img.domain.season));
    w.i32(img.domain.route);
  }
  for (std::uint64_t id = 1; id <= index.vocabulary_size_; ++id) {
    const auto list = index.postings(static_cast<LibraryId>(id));
    w.u32(static_cast<std::uint32_t>(list.size()));
    for (const Posting& p : list) {
      w.u32(p.image);
      w.u32(p.finest_cell);
      w.u32(p.feature_ordinal);
    }
  }
  w.finish();
}

InvertedIndex load_index(const std::filesystem::path& path,
                         std::optional<std::uint64_t> expected_fingerprint) {
  const std::string where = path.string() + ": ";
  BinaryReader r(path);
  r.expect_magic("XDIX");
  const std::uint32_t version = r.u32();
  if (version != kIndexFormatVersion) {
    throw Error(ErrorCode::kFormat,
                where + "unsupported index version " + std::to_string(version));
  }
  InvertedIndex index;
  index.vocabulary_size_ = r.u64();
  index.pyramid_.levels = r.u8();
  index.dim_ = r.u32();
  index.library_fingerprint_ = r.u64();
  const std::uint32_t flags = r.u32();
  if ((flags & ~kKnownFlags) != 0) {
    throw Error(ErrorCode::kFormat, where + "unsupported header flags " +
                                        std::to_string(flags));
  }
  index.miner_.k = static_cast<int>(r.u32());
  index.miner_.k_prime = static_cast<int>(r.u32());
  index.miner_.d0 = r.f64();
  if (index.vocabulary_size_ == 0 || index.vocabulary_size_ >= 0xffffffffull ||
      index.pyramid_.levels > kMaxPyramidLevels) {
    throw Error(ErrorCode::kFormat, where + "invalid header");
  }
  if (expected_fingerprint && *expected_fingerprint != index.library_fingerprint_) {
    throw Error(ErrorCode::kFingerprintMismatch,
                where + "index was built against library " +
                    hex64(index.library_fingerprint_) + ", expected " +
                    hex64(*expected_fingerprint));
  }

  constexpr std::uint64_t kImageRecordBytes = 8 + 4 + 1 + 8 + 1 + 4;
  const std::uint64_t num_images = r.u64();
  if (num_images > (r.file_size() - r.offset()) / kImageRecordBytes) {
    throw Error(ErrorCode::kTruncated,
                where + "image table of " + std::to_string(num_images) +
                    " entries exceeds file size " + std::to_string(r.file_size()));
  }
  index.images_.resize(num_images);
  for (auto& img : index.images_) {
    img.image_id = r.i64();
    img.num_features = r.u32();
    const bool has_place = r.u8() != 0;
    const std::int64_t place = r.i64();
    if (has_place) img.place_id = place;
    const std::uint8_t season = r.u8();
    if (season >= kNumSeasons) {
      throw Error(ErrorCode::kFormat, where + "bad season code at byte offset " +
                                          std::to_string(r.offset() - 1));
    }
    img.domain.season = static_cast<Season>(season);
    img.domain.route = r.i32();
  }
  for (std::size_t i = 1; i < index.images_.size(); ++i) {
    if (index.images_[i - 1].image_id >= index.images_[i].image_id) {
      throw Error(ErrorCode::kFormat, where + "image table not strictly sorted");
    }
  }

  const std::uint32_t max_cell = cells_at_level(index.pyramid_.levels);
  index.offsets_.assign(index.vocabulary_size_ + 1, 0);
  for (std::uint64_t id = 1; id <= index.vocabulary_size_; ++id) {
    const std::uint32_t count = r.u32();
    if (count > (r.file_size() - r.offset()) / 12) {
      throw Error(ErrorCode::kTruncated,
                  where + "posting list of id " + std::to_string(id) +
                      " runs past end of file at byte offset " +
                      std::to_string(r.file_size()));
    }
    for (std::uint32_t c = 0; c < count; ++c) {
      Posting p;
      p.image = r.u32();
      p.finest_cell = r.u32();
      p.feature_ordinal = r.u32();
      if (p.image >= num_images || p.finest_cell >= max_cell ||
          p.feature_ordinal >= index.images_[p.image].num_features) {
        throw Error(ErrorCode::kFormat, where + "posting out of range before byte offset " +
                                            std::to_string(r.offset()));
      }
      index.postings_.push_back(p);
    }
    index.offsets_[id] = index.postings_.size();
  }
  r.expect_end();
  return index;
}

}  // namespace xdloc

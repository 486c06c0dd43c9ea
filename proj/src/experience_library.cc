#include "xdloc/experience_library.h"

#include <algorithm>
#include <string>

#include "xdloc/binary_io.h"
#include "xdloc/error.h"

namespace xdloc {
namespace {

constexpr std::uint32_t kLibraryFormatVersion = 1;

std::uint64_t compute_fingerprint(std::size_t dim, std::span<const float> data,
                                  std::size_t count) {
  Fingerprint64 fp;
  fp.update_value(static_cast<std::uint64_t>(count));
  fp.update_value(static_cast<std::uint64_t>(dim));
  fp.update(std::as_bytes(data));
  return fp.value();
}

}  // namespace

ExperienceLibrary::ExperienceLibrary(std::size_t dim,
                                     std::vector<float> descriptors,
                                     std::vector<Provenance> provenance)
    : dim_(dim),
      descriptors_(std::move(descriptors)),
      provenance_(std::move(provenance)) {
  if (provenance_.empty()) {
    throw Error(ErrorCode::kEmptyLibrary, "library contains no features");
  }
  if (dim_ == 0 || descriptors_.size() != provenance_.size() * dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "library descriptor block does not match V x dim");
  }
  if (provenance_.size() >= 0xffffffffull) {
    throw Error(ErrorCode::kInvalidArgument, "library exceeds 2^32-1 features");
  }
  fingerprint_ = compute_fingerprint(dim_, descriptors_, provenance_.size());
}

bool ExperienceLibrary::operator==(const ExperienceLibrary& other) const {
  return dim_ == other.dim_ && descriptors_ == other.descriptors_ &&
         provenance_ == other.provenance_;
}

std::string_view vocabulary_kind_token(VocabularyKind kind) {
  switch (kind) {
    case VocabularyKind::kCrossDomain: return "cd";
    case VocabularyKind::kCrossSeason: return "cs";
    case VocabularyKind::kCrossRoute: return "cr";
    case VocabularyKind::kFull: return "full";
  }
  return "full";
}

VocabularyKind parse_vocabulary_kind(std::string_view token) {
  for (auto kind : {VocabularyKind::kCrossDomain, VocabularyKind::kCrossSeason,
                    VocabularyKind::kCrossRoute, VocabularyKind::kFull}) {
    if (vocabulary_kind_token(kind) == token) return kind;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown vocabulary kind '" + std::string(token) + "'");
}

DomainFilter make_vocabulary_filter(VocabularyKind kind,
                                    std::span<const DomainLabel> input_domains) {
  std::vector<DomainLabel> inputs(input_domains.begin(), input_domains.end());
  auto season_seen = [inputs](Season s) {
    return std::any_of(inputs.begin(), inputs.end(),
                       [s](const DomainLabel& d) { return d.season == s; });
  };
  auto route_seen = [inputs](int r) {
    return std::any_of(inputs.begin(), inputs.end(),
                       [r](const DomainLabel& d) { return d.route == r; });
  };
  switch (kind) {
    case VocabularyKind::kCrossDomain:
      return [=](const DomainLabel& d) {
        return !season_seen(d.season) && !route_seen(d.route);
      };
    case VocabularyKind::kCrossSeason:
      return [=](const DomainLabel& d) { return !season_seen(d.season); };
    case VocabularyKind::kCrossRoute:
      return [=](const DomainLabel& d) { return !route_seen(d.route); };
    case VocabularyKind::kFull:
      break;
  }
  return [](const DomainLabel&) { return true; };
}

ExperienceLibrary build_library(std::span<const ImageRecord> images,
                                const DomainFilter& filter) {
  std::size_t dim = 0;
  for (const auto& image : images) {
    for (std::size_t f = 0; f < image.features.size(); ++f) {
      const std::size_t d = image.features[f].desc.size();
      if (dim == 0) dim = d;
      if (d != dim || d == 0) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "image " + std::to_string(image.image_id) + " feature " +
                        std::to_string(f) + " has dimension " +
                        std::to_string(d) + ", expected " + std::to_string(dim));
      }
    }
  }

  std::vector<float> descriptors;
  std::vector<Provenance> provenance;
  for (const auto& image : images) {
    if (filter && !filter(image.domain)) continue;
    for (const auto& feature : image.features) {
      descriptors.insert(descriptors.end(), feature.desc.begin(),
                         feature.desc.end());
      provenance.push_back({image.image_id, image.domain});
    }
  }
  if (provenance.empty()) {
    throw Error(ErrorCode::kEmptyLibrary,
                "no library feature passes the vocabulary filter");
  }
  return ExperienceLibrary(dim, std::move(descriptors), std::move(provenance));
}

// Layout: magic "XDLB", version u32, V u64, dim u32, fingerprint u64,
// V x (source image i64, season u8, route i32), V x dim f32.
void save_library(const ExperienceLibrary& library,
                  const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic("XDLB");
  w.u32(kLibraryFormatVersion);
  w.u64(library.size());
  w.u32(static_cast<std::uint32_t>(library.dim()));
  w.u64(library.fingerprint());
  for (const auto& p : library.provenances()) {
    w.i64(p.source_image);
    w.u8(static_cast<std::uint8_t>(p.domain.season));
    w.i32(p.domain.route);
  }
  w.f32_array(library.data());
  w.finish();
}

ExperienceLibrary load_library(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic("XDLB");
  const std::uint32_t version = r.u32();
  if (version != kLibraryFormatVersion) {
    throw Error(ErrorCode::kFormat, path.string() + ": unsupported library version " +
                                        std::to_string(version));
  }
  const std::uint64_t count = r.u64();
  const std::uint32_t dim = r.u32();
  const std::uint64_t stored_fp = r.u64();
  if (count == 0 || dim == 0) {
    throw Error(ErrorCode::kFormat, path.string() + ": empty library");
  }
  const std::uint64_t needed = count * (8 + 1 + 4) + count * dim * 4ull;
  if (r.offset() + needed > r.file_size()) {
    throw Error(ErrorCode::kTruncated,
                path.string() + ": file ends at byte offset " +
                    std::to_string(r.file_size()) + ", expected " +
                    std::to_string(r.offset() + needed));
  }
  std::vector<Provenance> provenance(count);
  for (auto& p : provenance) {
    p.source_image = r.i64();
    const std::uint8_t season = r.u8();
    if (season >= kNumSeasons) {
      throw Error(ErrorCode::kFormat, path.string() + ": bad season code at offset " +
                                          std::to_string(r.offset() - 1));
    }
    p.domain.season = static_cast<Season>(season);
    p.domain.route = r.i32();
  }
  std::vector<float> descriptors(count * dim);
  r.f32_array(descriptors);
  r.expect_end();
  ExperienceLibrary library(dim, std::move(descriptors), std::move(provenance));
  if (library.fingerprint() != stored_fp) {
    throw Error(ErrorCode::kFingerprintMismatch,
                path.string() + ": stored fingerprint does not match contents");
  }
  return library;
}

}  // namespace xdloc

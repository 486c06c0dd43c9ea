#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "xdloc/core_model.h"

namespace xdloc {

struct Provenance {
  ImageId source_image = 0;
  DomainLabel domain;

  bool operator==(const Provenance&) const = default;
};

// The raw, unquantized feature library z[1..V]. Immutable once built.
class ExperienceLibrary {
 public:
  // `descriptors` is row-major V x dim. Throws Error(kEmptyLibrary) when V is
  // zero and Error(kDimensionMismatch) when sizes disagree.
  ExperienceLibrary(std::size_t dim, std::vector<float> descriptors,
                    std::vector<Provenance> provenance);

  std::size_t size() const { return provenance_.size(); }
  std::size_t dim() const { return dim_; }

  // id in [1, size()].
  std::span<const float> descriptor(LibraryId id) const {
    return {descriptors_.data() + (static_cast<std::size_t>(id) - 1) * dim_, dim_};
  }
  const Provenance& provenance(LibraryId id) const { return provenance_[id - 1]; }

  // Row-major V x dim block; row i holds library id i + 1.
  std::span<const float> data() const { return descriptors_; }
  std::span<const Provenance> provenances() const { return provenance_; }

  // Hash over (V, dim, descriptor bytes); identifies the library an index was
  // built against.
  std::uint64_t fingerprint() const { return fingerprint_; }

  bool operator==(const ExperienceLibrary& other) const;

 private:
  std::size_t dim_;
  std::vector<float> descriptors_;
  std::vector<Provenance> provenance_;
  std::uint64_t fingerprint_;
};

using DomainFilter = std::function<bool(const DomainLabel&)>;

// Vocabulary variants, expressed relative to the domains of the images that
// will be explained by the library.
enum class VocabularyKind {
  kCrossDomain,  // season and route both unseen
  kCrossSeason,  // season unseen
  kCrossRoute,   // route unseen
  kFull,         // everything
};

std::string_view vocabulary_kind_token(VocabularyKind kind);  // cd|cs|cr|full
VocabularyKind parse_vocabulary_kind(std::string_view token);

DomainFilter make_vocabulary_filter(VocabularyKind kind,
                                    std::span<const DomainLabel> input_domains);

// Flattens the features of every image accepted by `filter` (all images when
// empty) in input order. Ids are assigned 1..V.
ExperienceLibrary build_library(std::span<const ImageRecord> images,
                                const DomainFilter& filter = {});

// "XDLB" binary container.
void save_library(const ExperienceLibrary& library,
                  const std::filesystem::path& path);
ExperienceLibrary load_library(const std::filesystem::path& path);

}  // namespace xdloc

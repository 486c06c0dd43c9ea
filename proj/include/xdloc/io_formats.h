#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "xdloc/core_model.h"
#include "xdloc/dataset.h"

namespace xdloc {

// Descriptor file ("XDSC"), little-endian:
//   magic "XDSC" | version u32 | dim u32 | reserved u32 (0) | count u64 |
//   count x (x f32, y f32, scale f32, orientation f32, desc f32 x dim)
// File size is exactly 24 + count * (16 + 4 * dim) bytes.
inline constexpr std::uint32_t kDescriptorFormatVersion = 1;

void write_descriptor_file(const std::filesystem::path& path,
                           std::span<const Feature> features, std::uint32_t dim);

// Throws Error(kFormat) for bad magic/version or coordinates outside [0, 1]
// (naming the record index), Error(kTruncated) naming the byte offset where
// records run out.
std::vector<Feature> read_descriptor_file(const std::filesystem::path& path);

struct ManifestEntry {
  ImageId image_id = 0;
  std::filesystem::path path;  // resolved against the manifest directory
  DomainLabel domain;
  std::optional<std::int64_t> place_id;

  bool operator==(const ManifestEntry&) const = default;
};

// JSON document:
// {
//   "version": 1,
//   "library":  [{"image_id": 7, "path": "desc/7.xdsc", "season": "AU",
//                 "route": 2, "place_id": 3}],
//   "database": [...], "query": [...],
//   "relevance": [{"query_id": 1, "relevant": [4, 5]},
//                 {"query_id": 2, "center": 12, "radius": 10}],
//   "database_subsets": [{"query_id": 1, "database_ids": [4, 9]}],
//   "notes": ["free text"]
// }
// Every collection is optional. Window relevance is resolved against the
// database collection at load time.
struct DatasetManifest {
  std::vector<ManifestEntry> library;
  std::vector<ManifestEntry> database;
  std::vector<ManifestEntry> queries;
  RelevanceSpec relevance;
  std::map<ImageId, std::vector<ImageId>> database_subsets;
  std::vector<std::string> notes;
};

// Stat-checks every referenced file. Throws Error(kNotFound) for missing
// files, Error(kDuplicateId) naming a repeated id, Error(kInvalidArgument)
// for unknown season tokens, Error(kFormat) for malformed documents.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Reads every descriptor file named by the manifest.
Dataset load_dataset(const DatasetManifest& manifest, int threads = 1);

// Writes one descriptor file per image under `dir`/descriptors and a
// manifest at `dir`/manifest.json; returns the manifest path.
std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                                   std::uint32_t dim);

}  // namespace xdloc

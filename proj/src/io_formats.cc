#include "xdloc/io_formats.h"

#include <fstream>
#include <set>
#include <string>

#include "json.hpp"
#include "xdloc/binary_io.h"
#include "xdloc/error.h"
#include "xdloc/parallel.h"

namespace xdloc {
namespace {

using nlohmann::json;

constexpr std::uint64_t kDescriptorHeaderBytes = 24;
constexpr int kManifestVersion = 1;

std::vector<ManifestEntry> parse_collection(const json& doc, const char* key,
                                            const std::filesystem::path& base,
                                            const std::string& where) {
  std::vector<ManifestEntry> out;
  if (!doc.contains(key)) return out;
  const json& list = doc.at(key);
  if (!list.is_array()) {
    throw Error(ErrorCode::kFormat, where + ": '" + key + "' must be an array");
  }
  std::set<ImageId> seen;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& e = list[i];
    const std::string at = where + ": " + key + "[" + std::to_string(i) + "]";
    ManifestEntry entry;
    try {
      entry.image_id = e.at("image_id").get<ImageId>();
      entry.path = e.at("path").get<std::string>();
      entry.domain.season = parse_season(e.value("season", std::string("OTHER")));
      entry.domain.route = e.value("route", 0);
      if (e.contains("place_id") && !e.at("place_id").is_null()) {
        entry.place_id = e.at("place_id").get<std::int64_t>();
      }
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kFormat, at + ": " + ex.what());
    } catch (const Error& ex) {
      throw Error(ex.code(), at + ": " + ex.what());
    }
    if (entry.domain.route < 0) {
      throw Error(ErrorCode::kInvalidArgument, at + ": route must be >= 0");
    }
    if (!seen.insert(entry.image_id).second) {
      throw Error(ErrorCode::kDuplicateId, at + ": duplicate image_id " +
                                               std::to_string(entry.image_id) +
                                               " in " + key);
    }
    if (entry.path.is_relative()) entry.path = base / entry.path;
    if (!std::filesystem::is_regular_file(entry.path)) {
      throw Error(ErrorCode::kNotFound,
                  at + ": descriptor file '" + entry.path.string() + "' not found");
    }
    out.push_back(std::move(entry));
  }
  return out;
}

json collection_json(const std::vector<ManifestEntry>& entries,
                     const std::filesystem::path& base) {
  json list = json::array();
  for (const auto& e : entries) {
    json j;
    j["image_id"] = e.image_id;
    j["path"] = e.path.lexically_relative(base).generic_string();
    if (j["path"].get<std::string>().empty()) j["path"] = e.path.generic_string();
    j["season"] = std::string(season_token(e.domain.season));
    j["route"] = e.domain.route;
    if (e.place_id) j["place_id"] = *e.place_id;
    list.push_back(std::move(j));
  }
  return list;
}

}  // namespace

void write_descriptor_file(const std::filesystem::path& path,
                           std::span<const Feature> features, std::uint32_t dim) {
  BinaryWriter w(path);
  w.magic("XDSC");
  w.u32(kDescriptorFormatVersion);
  w.u32(dim);
  w.u32(0);
  w.u64(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Feature& f = features[i];
    if (f.desc.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  path.string() + ": record " + std::to_string(i) + " has dimension " +
                      std::to_string(f.desc.size()) + ", expected " + std::to_string(dim));
    }
    w.f32(static_cast<float>(f.pos.x));
    w.f32(static_cast<float>(f.pos.y));
    w.f32(f.scale);
    w.f32(f.orientation);
    w.f32_array(f.desc);
  }
  w.finish();
}

std::vector<Feature> read_descriptor_file(const std::filesystem::path& path) {
  const std::string where = path.string() + ": ";
  BinaryReader r(path);
  r.expect_magic("XDSC");
  const std::uint32_t version = r.u32();
  if (version != kDescriptorFormatVersion) {
    throw Error(ErrorCode::kFormat,
                where + "unsupported descriptor version " + std::to_string(version));
  }
  const std::uint32_t dim = r.u32();
  r.u32();  // reserved
  const std::uint64_t count = r.u64();
  if (dim == 0) throw Error(ErrorCode::kFormat, where + "descriptor dimension is 0");
  const std::uint64_t record_bytes = 16 + 4ull * dim;
  const std::uint64_t available = r.file_size() - kDescriptorHeaderBytes;
  if (available / record_bytes < count) {
    const std::uint64_t complete = available / record_bytes;
    throw Error(ErrorCode::kTruncated,
                where + "header declares " + std::to_string(count) + " records but only " +
                    std::to_string(complete) + " fit; record " + std::to_string(complete) +
                    " is cut off at byte offset " + std::to_string(r.file_size()));
  }
  std::vector<Feature> features(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Feature& f = features[i];
    const float x = r.f32();
    const float y = r.f32();
    if (!(x >= 0.0f && x <= 1.0f && y >= 0.0f && y <= 1.0f)) {
      throw Error(ErrorCode::kFormat, where + "record " + std::to_string(i) +
                                          " has coordinates outside [0, 1]");
    }
    f.pos = {x, y};
    f.scale = r.f32();
    f.orientation = r.f32();
    f.desc.resize(dim);
    r.f32_array(f.desc);
  }
  r.expect_end();
  return features;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "manifest '" + where + "' not found");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kFormat, where + ": " + ex.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kFormat, where + ": not a JSON object");
  if (doc.value("version", kManifestVersion) != kManifestVersion) {
    throw Error(ErrorCode::kFormat, where + ": unsupported manifest version");
  }
  const std::filesystem::path base = path.parent_path();
  DatasetManifest m;
  m.library = parse_collection(doc, "library", base, where);
  m.database = parse_collection(doc, "database", base, where);
  m.queries = parse_collection(doc, "query", base, where);

  std::vector<ImageId> db_ids;
  for (const auto& e : m.database) db_ids.push_back(e.image_id);
  try {
    for (const json& r : doc.value("relevance", json::array())) {
      const ImageId q = r.at("query_id").get<ImageId>();
      std::vector<ImageId> rel;
      if (r.contains("relevant")) {
        rel = r.at("relevant").get<std::vector<ImageId>>();
      } else {
        rel = window_relevance(r.at("center").get<ImageId>(), r.value("radius", 10),
                               db_ids);
      }
      if (!m.relevance.relevant.emplace(q, std::move(rel)).second) {
        throw Error(ErrorCode::kDuplicateId,
                    where + ": duplicate relevance entry for query " + std::to_string(q));
      }
    }
    for (const json& s : doc.value("database_subsets", json::array())) {
      m.database_subsets[s.at("query_id").get<ImageId>()] =
          s.at("database_ids").get<std::vector<ImageId>>();
    }
    m.notes = doc.value("notes", std::vector<std::string>{});
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kFormat, where + ": " + ex.what());
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  const std::filesystem::path base = path.parent_path();
  json doc;
  doc["version"] = kManifestVersion;
  doc["library"] = collection_json(manifest.library, base);
  doc["database"] = collection_json(manifest.database, base);
  doc["query"] = collection_json(manifest.queries, base);
  json rel = json::array();
  for (const auto& [q, ids] : manifest.relevance.relevant) {
    rel.push_back({{"query_id", q}, {"relevant", ids}});
  }
  doc["relevance"] = std::move(rel);
  json subsets = json::array();
  for (const auto& [q, ids] : manifest.database_subsets) {
    subsets.push_back({{"query_id", q}, {"database_ids", ids}});
  }
  doc["database_subsets"] = std::move(subsets);
  if (!manifest.notes.empty()) doc["notes"] = manifest.notes;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest '" + path.string() + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

Dataset load_dataset(const DatasetManifest& manifest, int threads) {
  auto load = [threads](const std::vector<ManifestEntry>& entries) {
    std::vector<ImageRecord> images(entries.size());
    parallel_for(entries.size(), threads, [&](std::size_t i) {
      images[i].image_id = entries[i].image_id;
      images[i].domain = entries[i].domain;
      images[i].place_id = entries[i].place_id;
      images[i].features = read_descriptor_file(entries[i].path);
    });
    return images;
  };
  Dataset d;
  d.library = load(manifest.library);
  d.database = load(manifest.database);
  d.queries = load(manifest.queries);
  d.relevance = manifest.relevance;
  d.database_subsets = manifest.database_subsets;
  return d;
}

std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                                   std::uint32_t dim) {
  const std::filesystem::path desc_dir = dir / "descriptors";
  std::filesystem::create_directories(desc_dir);
  DatasetManifest m;
  auto save = [&](const std::vector<ImageRecord>& images, const char* prefix,
                  std::vector<ManifestEntry>& entries) {
    for (const ImageRecord& img : images) {
      ManifestEntry e;
      e.image_id = img.image_id;
      e.path = desc_dir / (std::string(prefix) + "_" + std::to_string(img.image_id) + ".xdsc");
      e.domain = img.domain;
      e.place_id = img.place_id;
      write_descriptor_file(e.path, img.features, dim);
      entries.push_back(std::move(e));
    }
  };
  save(dataset.library, "library", m.library);
  save(dataset.database, "database", m.database);
  save(dataset.queries, "query", m.queries);
  m.relevance = dataset.relevance;
  m.database_subsets = dataset.database_subsets;
  const std::filesystem::path manifest_path = dir / "manifest.json";
  save_manifest(m, manifest_path);
  return manifest_path;
}

}  // namespace xdloc

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xdloc/bow_baseline.h"
#include "xdloc/core_model.h"
#include "xdloc/dataset.h"
#include "xdloc/experience_library.h"
#include "xdloc/knn_miner.h"
#include "xdloc/spm_matcher.h"
#include "xdloc/synthetic_world.h"

namespace xdloc {

enum class Method {
  kCdSd,    // nearest-neighbour scene descriptor with the spatial pyramid
  kNbnnSd,  // same descriptor, pyramid depth 0
  kTfIdf,   // bag-of-words baseline
};

std::string_view method_token(Method m);  // cd-sd | nbnn-sd | tfidf
Method parse_method(std::string_view token);

struct ExperimentConfig {
  Method method = Method::kCdSd;
  MinerConfig miner;
  PyramidConfig pyramid;
  VocabularyKind vocabulary = VocabularyKind::kCrossDomain;
  KMeansOptions kmeans;
  int threads = 0;
  std::size_t subimage_queries = 5;  // queries with a sub-image report
  std::size_t subimage_pairs = 5;
};

struct QueryOutcome {
  ImageId query_id = 0;
  DomainLabel query_domain;
  DomainLabel database_domain;  // domain of the first relevant image
  std::size_t db_size = 0;
  std::size_t best_rank = 0;
  double average_precision = 0.0;
  std::vector<ScoredImage> top;  // first five ranked images
};

struct DomainPairResult {
  DomainLabel query_domain;
  DomainLabel database_domain;
  std::size_t queries = 0;
  double anr = 0.0;
  double map = 0.0;
};

struct SubimageReport {
  ImageId query_id = 0;
  ImageId candidate_id = 0;
  std::vector<SubimagePair> pairs;
};

struct ExperimentReport {
  Method method = Method::kCdSd;
  ExperimentConfig config;
  std::size_t library_size = 0;
  std::uint64_t library_fingerprint = 0;
  std::size_t database_size = 0;
  double anr = 0.0;
  double map = 0.0;
  std::vector<QueryOutcome> queries;
  std::vector<RankedResult> rankings;
  std::vector<DomainPairResult> grid;
  ErrorProfile error_profile;
  UsageHistogram usage;
  std::vector<SubimageReport> subimages;
  std::optional<Vocabulary> vocabulary;  // trained by the TF-IDF method
  // Wall-clock seconds per query; kept out of the deterministic report.
  std::vector<double> query_seconds;

  // Deterministic summary: identical inputs give an identical document.
  nlohmann::json to_json() const;
};

// Builds the library (vocabulary filter relative to every query and database
// domain), describes and indexes the database, ranks every query and
// evaluates ANR/mAP plus the analysis tables.
ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& cfg);

// Writes report.json, per_query.csv, rankings.tsv, anr_grid.csv, map_grid.csv,
// error_profile.csv, usage_histogram.csv, subimages.csv and timing.json.
// Everything except timing.json is byte-identical across reruns.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

// Shortest round-trip decimal form.
std::string format_double(double v);

nlohmann::json world_config_to_json(const SyntheticWorldConfig& cfg);
// Missing keys keep their defaults.
SyntheticWorldConfig world_config_from_json(const nlohmann::json& doc);

}  // namespace xdloc

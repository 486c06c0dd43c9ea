#include "xdloc/cli.h"

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xdloc/bow_baseline.h"
#include "xdloc/error.h"
#include "xdloc/experience_library.h"
#include "xdloc/experiment.h"
#include "xdloc/inverted_index.h"
#include "xdloc/io_formats.h"
#include "xdloc/knn_miner.h"
#include "xdloc/nn_descriptor.h"
#include "xdloc/parallel.h"
#include "xdloc/spm_matcher.h"
#include "xdloc/synthetic_world.h"

namespace xdloc {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  MinerConfig miner;
  PyramidConfig pyramid;
  std::string vocab = "cd";
  std::optional<std::string> query_season;
  std::optional<int> query_route;
  std::size_t words = KMeansOptions{}.num_words;
  std::uint64_t seed = 1;
  int threads = 0;
  fs::path output_dir = ".";

  fs::path manifest;
  fs::path query_manifest;
  fs::path world_config;
  fs::path library;
  fs::path index;
  std::string method = "cd-sd";
  std::size_t pairs = 5;
  std::size_t top = 0;
};

void add_miner_flags(CLI::App& app, Options& o) {
  app.add_option("--k", o.miner.k,
                 "neighbours mined per query feature (default 10, the published setting)")
      ->envname("XDLOC_K")
      ->capture_default_str();
  app.add_option("--k-prime", o.miner.k_prime,
                 "neighbours mined per database feature (default 3, the published setting)")
      ->envname("XDLOC_K_PRIME")
      ->capture_default_str();
  app.add_option("--d0", o.miner.d0,
                 "similarity truncation distance (default 200, the published setting)")
      ->envname("XDLOC_D0")
      ->capture_default_str();
}

void add_levels_flag(CLI::App& app, Options& o) {
  app.add_option("--levels", o.pyramid.levels,
                 "spatial pyramid depth L; 0 gives plain image-to-class scoring "
                 "(default 2, the published setting)")
      ->envname("XDLOC_LEVELS")
      ->capture_default_str();
}

void add_vocab_flags(CLI::App& app, Options& o) {
  app.add_option("--vocab", o.vocab,
                 "library filter relative to the input domains: cd | cs | cr | full "
                 "(default cd, the cross-domain setting)")
      ->envname("XDLOC_VOCAB")
      ->check(CLI::IsMember({"cd", "cs", "cr", "full"}))
      ->capture_default_str();
  app.add_option("--query-season", o.query_season,
                 "season (SP|SU|AU|WI|OTHER) to treat as the input season when filtering")
      ->envname("XDLOC_QUERY_SEASON");
  app.add_option("--query-route", o.query_route,
                 "route to treat as the input route when filtering")
      ->envname("XDLOC_QUERY_ROUTE");
}

void add_common_flags(CLI::App& app, Options& o) {
  app.add_option("--threads", o.threads,
                 "worker threads; 0 uses every available core (results never depend on it)")
      ->envname("XDLOC_THREADS")
      ->capture_default_str();
  app.add_option("--output-dir", o.output_dir, "directory receiving every output")
      ->envname("XDLOC_OUTPUT_DIR")
      ->capture_default_str();
}

void add_kmeans_flags(CLI::App& app, Options& o) {
  app.add_option("--words", o.words,
                 "visual words for the bag-of-words baseline (default 1000, the published "
                 "setting)")
      ->envname("XDLOC_WORDS")
      ->capture_default_str();
  app.add_option("--seed", o.seed, "k-means initialisation seed (default 1, artifact choice)")
      ->envname("XDLOC_SEED")
      ->capture_default_str();
}

void validate(const Options& o) {
  try {
    o.miner.validate();
    o.pyramid.validate();
    if (o.query_season) parse_season(*o.query_season);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (o.words == 0) throw UsageError("--words must be positive");
}

Dataset load_manifest_dataset(const fs::path& path, int threads) {
  return load_dataset(load_manifest(path), threads);
}

// Input domains for the library filter: the query and database domains of the
// dataset, with --query-season / --query-route substituted when given.
std::vector<DomainLabel> input_domains(const Dataset& data, const Options& o) {
  std::set<DomainLabel> domains;
  auto add = [&](DomainLabel d) {
    if (o.query_season) d.season = parse_season(*o.query_season);
    if (o.query_route) d.route = *o.query_route;
    domains.insert(d);
  };
  for (const auto& img : data.queries) add(img.domain);
  for (const auto& img : data.database) add(img.domain);
  if (domains.empty() && (o.query_season || o.query_route)) add(DomainLabel{});
  return {domains.begin(), domains.end()};
}

ExperienceLibrary filtered_library(const Dataset& data, const Options& o) {
  const auto inputs = input_domains(data, o);
  return build_library(data.library,
                       make_vocabulary_filter(parse_vocabulary_kind(o.vocab), inputs));
}

fs::path library_next_to(const fs::path& index) {
  return index.parent_path() / "library.xdlb";
}

ExperimentConfig experiment_config(const Options& o, Method method) {
  ExperimentConfig cfg;
  cfg.method = method;
  cfg.miner = o.miner;
  cfg.pyramid = o.pyramid;
  cfg.vocabulary = parse_vocabulary_kind(o.vocab);
  cfg.kmeans.num_words = o.words;
  cfg.kmeans.seed = o.seed;
  cfg.threads = o.threads;
  cfg.subimage_pairs = o.pairs;
  return cfg;
}

Dataset experiment_dataset(const Options& o) {
  if (!o.manifest.empty() && !o.world_config.empty()) {
    throw UsageError("give either --manifest or --world-config, not both");
  }
  if (!o.manifest.empty()) return load_manifest_dataset(o.manifest, o.threads);
  if (o.world_config.empty()) throw UsageError("one of --manifest or --world-config is required");
  std::ifstream in(o.world_config);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open '" + o.world_config.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, o.world_config.string() + ": " + e.what());
  }
  return generate_world(world_config_from_json(doc));
}

void summarize(std::ostream& out, const ExperimentReport& r) {
  out << "method=" << method_token(r.method) << " queries=" << r.queries.size()
      << " database=" << r.database_size << " library=" << r.library_size
      << " anr=" << format_double(r.anr) << " map=" << format_double(r.map) << '\n';
}

void write_rankings(const fs::path& path, const std::vector<RankedResult>& rankings,
                    std::size_t top) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << "query_id\trank\timage_id\tscore\n";
  for (const auto& r : rankings) {
    const std::size_t n = top == 0 ? r.entries.size() : std::min(top, r.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
      out << r.query_id << '\t' << i + 1 << '\t' << r.entries[i].image_id << '\t'
          << format_double(r.entries[i].score) << '\n';
    }
  }
}

// Loads the index together with the library it was built against.
struct LoadedIndex {
  ExperienceLibrary library;
  InvertedIndex index;
};

LoadedIndex load_index_and_library(const Options& o) {
  const fs::path lib_path = o.library.empty() ? library_next_to(o.index) : o.library;
  ExperienceLibrary library = load_library(lib_path);
  InvertedIndex index = load_index(o.index, library.fingerprint());
  return {std::move(library), std::move(index)};
}

int cmd_build_library(const Options& o, std::ostream& out) {
  const Dataset data = load_manifest_dataset(o.manifest, o.threads);
  const ExperienceLibrary library = filtered_library(data, o);
  fs::create_directories(o.output_dir);
  const fs::path path = o.output_dir / "library.xdlb";
  save_library(library, path);
  out << "library=" << path.string() << " features=" << library.size()
      << " dim=" << library.dim() << " fingerprint=" << library.fingerprint() << '\n';
  return kExitOk;
}

int cmd_index(const Options& o, std::ostream& out) {
  const Dataset data = load_manifest_dataset(o.manifest, o.threads);
  const fs::path lib_path = o.library.empty() ? o.output_dir / "library.xdlb" : o.library;
  const ExperienceLibrary library = load_library(lib_path);
  const KnnMiner miner(library);
  const auto descriptors = describe_all(data.database, DescriptorRole::kDatabase, miner,
                                        o.miner, o.pyramid, o.threads);
  const InvertedIndex index = build_index(descriptors, library, o.miner, o.pyramid);
  fs::create_directories(o.output_dir);
  const fs::path path = o.output_dir / "index.xdix";
  save_index(index, path);
  out << "index=" << path.string() << " images=" << index.images().size()
      << " postings=" << index.total_postings() << '\n';
  return kExitOk;
}

int cmd_query(const Options& o, bool levels_given, std::ostream& out) {
  const LoadedIndex loaded = load_index_and_library(o);
  const Dataset queries = load_manifest_dataset(o.query_manifest, o.threads);
  PyramidConfig pyr = loaded.index.pyramid();
  if (levels_given) pyr.levels = o.pyramid.levels;
  if (pyr.levels > loaded.index.pyramid().levels) {
    throw UsageError("--levels exceeds the depth the index was built with");
  }
  const KnnMiner miner(loaded.library);
  const SpmMatcher matcher(loaded.index);
  std::vector<RankedResult> rankings(queries.queries.size());
  parallel_for(rankings.size(), o.threads, [&](std::size_t i) {
    const auto q = describe_query(queries.queries[i], miner, o.miner, pyr);
    rankings[i] = matcher.rank(q);
  });
  fs::create_directories(o.output_dir);
  write_rankings(o.output_dir / "rankings.tsv", rankings, o.top);
  out << "queries=" << rankings.size() << " levels=" << pyr.levels
      << " rankings=" << (o.output_dir / "rankings.tsv").string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  std::vector<Method> methods;
  if (o.method == "all") {
    methods = {Method::kCdSd, Method::kNbnnSd, Method::kTfIdf};
  } else {
    methods = {parse_method(o.method)};
  }
  const Dataset data = experiment_dataset(o);
  for (Method m : methods) {
    const ExperimentReport report = run_experiment(data, experiment_config(o, m));
    write_report(report, o.output_dir / std::string(method_token(m)));
    summarize(out, report);
  }
  return kExitOk;
}

int cmd_baseline(const Options& o, std::ostream& out) {
  const Dataset data = experiment_dataset(o);
  const ExperimentReport report = run_experiment(data, experiment_config(o, Method::kTfIdf));
  fs::create_directories(o.output_dir);
  if (report.vocabulary) save_vocabulary(*report.vocabulary, o.output_dir / "vocabulary.xdvw");
  write_report(report, o.output_dir / "tfidf");
  summarize(out, report);
  return kExitOk;
}

int cmd_gen_world(const Options& o, bool seed_given, std::ostream& out) {
  SyntheticWorldConfig cfg;
  if (!o.world_config.empty()) {
    std::ifstream in(o.world_config);
    if (!in) throw Error(ErrorCode::kNotFound, "cannot open '" + o.world_config.string() + "'");
    try {
      cfg = world_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, o.world_config.string() + ": " + e.what());
    }
  }
  if (seed_given) cfg.seed = o.seed;
  cfg.validate();
  const Dataset data = generate_world(cfg);
  const fs::path manifest = save_dataset(data, o.output_dir, static_cast<std::uint32_t>(cfg.dim));
  std::ofstream(o.output_dir / "world_config.json") << world_config_to_json(cfg).dump(2) << '\n';
  out << "manifest=" << manifest.string() << " library=" << data.library.size()
      << " database=" << data.database.size() << " queries=" << data.queries.size() << '\n';
  return kExitOk;
}

int cmd_analyze_errors(const Options& o, std::ostream& out) {
  const Dataset data = load_manifest_dataset(o.manifest, o.threads);
  const ExperienceLibrary library =
      o.library.empty() ? filtered_library(data, o) : load_library(o.library);
  std::vector<Feature> features;
  for (const auto& q : data.queries) {
    features.insert(features.end(), q.features.begin(), q.features.end());
  }
  if (features.empty()) throw Error(ErrorCode::kInvalidArgument, "manifest has no query features");
  const ErrorProfile profile = approx_error_profile(features, library, nullptr, o.threads);
  fs::create_directories(o.output_dir);
  std::ofstream table(o.output_dir / "error_profile.tsv");
  profile.write_table(table);
  out << "features=" << features.size() << " deciles=";
  const auto deciles = profile.deciles();
  for (std::size_t i = 0; i < deciles.size(); ++i) {
    out << (i ? "," : "") << format_double(deciles[i]);
  }
  out << '\n';
  return kExitOk;
}

int cmd_analyze_usage(const Options& o, std::ostream& out) {
  const Dataset data = load_manifest_dataset(o.manifest, o.threads);
  const ExperienceLibrary library =
      o.library.empty() ? filtered_library(data, o) : load_library(o.library);
  const KnnMiner miner(library);
  const auto descriptors = describe_all(data.queries, DescriptorRole::kQuery, miner, o.miner,
                                        o.pyramid, o.threads);
  const UsageHistogram hist = explanation_histogram(descriptors, library);
  fs::create_directories(o.output_dir);
  std::ofstream table(o.output_dir / "usage_histogram.tsv");
  hist.write_table(table);
  out << "queries=" << descriptors.size() << " entries=" << hist.total() << '\n';
  return kExitOk;
}

int cmd_report_subimages(const Options& o, std::ostream& out) {
  const LoadedIndex loaded = load_index_and_library(o);
  const Dataset queries = load_manifest_dataset(o.query_manifest, o.threads);
  const KnnMiner miner(loaded.library);
  const SpmMatcher matcher(loaded.index);
  fs::create_directories(o.output_dir);
  const fs::path path = o.output_dir / "subimages.csv";
  std::ofstream table(path);
  table << "query_id,candidate_id,position,level,cell,raw,weighted,x0,y0,x1,y1\n";
  for (const auto& img : queries.queries) {
    const auto q = describe_query(img, miner, o.miner, loaded.index.pyramid(), o.threads);
    // Relevant image when the manifest names one, top-ranked image otherwise.
    ImageId candidate = 0;
    const auto rel = queries.relevance.relevant.find(img.image_id);
    if (rel != queries.relevance.relevant.end() && !rel->second.empty()) {
      candidate = rel->second.front();
    } else {
      const RankedResult r = matcher.rank(q);
      if (r.entries.empty()) continue;
      candidate = r.entries.front().image_id;
    }
    const auto pairs = matcher.top_subimage_pairs(q, candidate, o.pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& p = pairs[i];
      table << img.image_id << ',' << candidate << ',' << i + 1 << ',' << p.level << ','
            << p.cell << ',' << format_double(p.raw) << ',' << format_double(p.weighted) << ','
            << format_double(p.box.x0) << ',' << format_double(p.box.y0) << ','
            << format_double(p.box.x1) << ',' << format_double(p.box.y1) << '\n';
    }
  }
  out << "subimages=" << path.string() << '\n';
  return kExitOk;
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-domain place recognition with nearest-neighbour scene descriptors"};
  app.require_subcommand(1);
  app.footer(
      "Every flag can also be set through an XDLOC_* environment variable, e.g. "
      "XDLOC_THREADS=4 or XDLOC_D0=150.");
  Options o;

  auto* build_lib = app.add_subcommand("build-library", "mine the experience library");
  build_lib->add_option("--manifest", o.manifest, "dataset manifest")->required();
  add_vocab_flags(*build_lib, o);
  add_common_flags(*build_lib, o);

  auto* index = app.add_subcommand("index", "describe and index the database images");
  index->add_option("--manifest", o.manifest, "dataset manifest")->required();
  index->add_option("--library", o.library, "library file (default <output-dir>/library.xdlb)");
  add_miner_flags(*index, o);
  add_levels_flag(*index, o);
  add_common_flags(*index, o);

  auto* query = app.add_subcommand("query", "rank database images for each query image");
  query->add_option("--index", o.index, "index file")->required();
  query->add_option("--query-manifest", o.query_manifest, "manifest listing query images")
      ->required();
  query->add_option("--library", o.library, "library file (default library.xdlb beside the index)");
  query->add_option("--top", o.top, "ranked images kept per query; 0 keeps all");
  add_miner_flags(*query, o);
  add_levels_flag(*query, o);
  add_common_flags(*query, o);

  auto* evaluate = app.add_subcommand("evaluate", "run an end-to-end retrieval experiment");
  auto* baseline = app.add_subcommand("baseline", "train the k-means vocabulary and run TF-IDF");
  for (CLI::App* sub : {evaluate, baseline}) {
    auto* m = sub->add_option("--manifest", o.manifest, "dataset manifest");
    auto* w = sub->add_option("--world-config", o.world_config, "synthetic world JSON");
    m->excludes(w);
    add_miner_flags(*sub, o);
    add_levels_flag(*sub, o);
    add_vocab_flags(*sub, o);
    add_kmeans_flags(*sub, o);
    add_common_flags(*sub, o);
  }
  evaluate->add_option("--method", o.method, "cd-sd | nbnn-sd | tfidf | all")
      ->check(CLI::IsMember({"cd-sd", "nbnn-sd", "tfidf", "all"}))
      ->envname("XDLOC_METHOD")
      ->capture_default_str();

  auto* gen = app.add_subcommand("gen-world", "write a synthetic dataset and its manifest");
  gen->add_option("--world-config", o.world_config, "synthetic world JSON (defaults otherwise)");
  auto* gen_seed = gen->add_option("--seed", o.seed, "world seed (overrides the config)");
  add_common_flags(*gen, o);

  auto* errors = app.add_subcommand("analyze-errors", "nearest-neighbour distance profile");
  auto* usage = app.add_subcommand("analyze-usage", "which library domains explain the queries");
  for (CLI::App* sub : {errors, usage}) {
    sub->add_option("--manifest", o.manifest, "dataset manifest")->required();
    sub->add_option("--library", o.library, "library file (filtered from the manifest otherwise)");
    add_vocab_flags(*sub, o);
    add_common_flags(*sub, o);
  }
  add_miner_flags(*usage, o);
  add_levels_flag(*usage, o);

  auto* subimages = app.add_subcommand("report-subimages", "best matching sub-image pairs");
  subimages->add_option("--index", o.index, "index file")->required();
  subimages->add_option("--query-manifest", o.query_manifest, "manifest listing query images")
      ->required();
  subimages->add_option("--library", o.library, "library file (default beside the index)");
  subimages->add_option("--pairs", o.pairs, "pairs reported per query")->capture_default_str();
  add_miner_flags(*subimages, o);
  add_common_flags(*subimages, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: kind=usage message=" << one_line(e.what()) << '\n';
    return kExitUsageError;
  }

  try {
    validate(o);
    if (app.got_subcommand(build_lib)) return cmd_build_library(o, out);
    if (app.got_subcommand(index)) return cmd_index(o, out);
    if (app.got_subcommand(query)) {
      return cmd_query(o, query->count("--levels") > 0, out);
    }
    if (app.got_subcommand(evaluate)) return cmd_evaluate(o, out);
    if (app.got_subcommand(baseline)) return cmd_baseline(o, out);
    if (app.got_subcommand(gen)) return cmd_gen_world(o, gen_seed->count() > 0, out);
    if (app.got_subcommand(errors)) return cmd_analyze_errors(o, out);
    if (app.got_subcommand(usage)) return cmd_analyze_usage(o, out);
    if (app.got_subcommand(subimages)) return cmd_report_subimages(o, out);
  } catch (const UsageError& e) {
    err << "error: kind=usage message=" << one_line(e.what()) << '\n';
    return kExitUsageError;
  } catch (const Error& e) {
    err << "error: kind=" << error_code_name(e.code()) << " message=" << one_line(e.what())
        << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: kind=internal message=" << one_line(e.what()) << '\n';
    return kExitDataError;
  }
  return kExitUsageError;
}

}  // namespace xdloc

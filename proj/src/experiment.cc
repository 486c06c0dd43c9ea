#include "xdloc/experiment.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <set>

#include "xdloc/error.h"
#include "xdloc/inverted_index.h"
#include "xdloc/metrics.h"
#include "xdloc/nn_descriptor.h"
#include "xdloc/parallel.h"

namespace xdloc {
namespace {

using nlohmann::json;

json domain_json(const DomainLabel& d) {
  return {{"season", std::string(season_token(d.season))}, {"route", d.route}};
}

// Keeps only `subset` images, preserving ranking order.
RankedResult restrict_ranking(RankedResult ranking, const std::vector<ImageId>& subset) {
  const std::set<ImageId> keep(subset.begin(), subset.end());
  std::erase_if(ranking.entries,
                [&](const ScoredImage& s) { return !keep.contains(s.image_id); });
  return ranking;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::string_view method_token(Method m) {
  switch (m) {
    case Method::kCdSd: return "cd-sd";
    case Method::kNbnnSd: return "nbnn-sd";
    case Method::kTfIdf: return "tfidf";
  }
  return "cd-sd";
}

Method parse_method(std::string_view token) {
  for (Method m : {Method::kCdSd, Method::kNbnnSd, Method::kTfIdf}) {
    if (method_token(m) == token) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown method '" + std::string(token) + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& cfg) {
  cfg.miner.validate();
  cfg.pyramid.validate();
  ExperimentReport report;
  report.method = cfg.method;
  report.config = cfg;
  report.database_size = dataset.database.size();
  if (dataset.queries.empty()) return report;
  if (dataset.database.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "experiment needs a non-empty database");
  }

  PyramidConfig pyramid = cfg.pyramid;
  if (cfg.method == Method::kNbnnSd) pyramid.levels = 0;

  std::set<DomainLabel> input_domains;
  for (const auto& img : dataset.queries) input_domains.insert(img.domain);
  for (const auto& img : dataset.database) input_domains.insert(img.domain);
  const std::vector<DomainLabel> inputs(input_domains.begin(), input_domains.end());
  const ExperienceLibrary library =
      build_library(dataset.library, make_vocabulary_filter(cfg.vocabulary, inputs));
  report.library_size = library.size();
  report.library_fingerprint = library.fingerprint();
  const KnnMiner miner(library);

  std::map<ImageId, DomainLabel> db_domain;
  for (const auto& img : dataset.database) db_domain[img.image_id] = img.domain;

  const std::size_t nq = dataset.queries.size();
  report.rankings.resize(nq);
  report.query_seconds.resize(nq);
  std::vector<SceneDescriptor> query_descriptors;

  if (cfg.method == Method::kTfIdf) {
    KMeansOptions kmeans = cfg.kmeans;
    kmeans.threads = cfg.threads;
    report.vocabulary = train_vocabulary(library, kmeans);
    const BowIndex bow(*report.vocabulary, dataset.database, cfg.threads);
    parallel_for(nq, cfg.threads, [&](std::size_t i) {
      const auto t0 = std::chrono::steady_clock::now();
      report.rankings[i] = bow.rank(dataset.queries[i]);
      report.query_seconds[i] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
  } else {
    const auto db = describe_all(dataset.database, DescriptorRole::kDatabase, miner,
                                 cfg.miner, pyramid, cfg.threads);
    const InvertedIndex index = build_index(db, library, cfg.miner, pyramid);
    const SpmMatcher matcher(index);
    query_descriptors.resize(nq);
    parallel_for(nq, cfg.threads, [&](std::size_t i) {
      const auto t0 = std::chrono::steady_clock::now();
      query_descriptors[i] = describe_query(dataset.queries[i], miner, cfg.miner, pyramid);
      report.rankings[i] = matcher.rank(query_descriptors[i]);
      report.query_seconds[i] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    report.usage = explanation_histogram(query_descriptors, library);
    for (std::size_t i = 0; i < std::min(nq, cfg.subimage_queries); ++i) {
      const auto& rel = dataset.relevance.relevant.find(dataset.queries[i].image_id);
      if (rel == dataset.relevance.relevant.end() || rel->second.empty()) continue;
      SubimageReport sub;
      sub.query_id = dataset.queries[i].image_id;
      sub.candidate_id = rel->second.front();
      if (!index.image_ordinal(sub.candidate_id)) continue;
      sub.pairs = matcher.top_subimage_pairs(query_descriptors[i], sub.candidate_id,
                                             cfg.subimage_pairs);
      report.subimages.push_back(std::move(sub));
    }
  }

  for (std::size_t i = 0; i < nq; ++i) {
    auto subset = dataset.database_subsets.find(dataset.queries[i].image_id);
    if (subset != dataset.database_subsets.end()) {
      report.rankings[i] = restrict_ranking(std::move(report.rankings[i]), subset->second);
    }
  }

  std::vector<Feature> query_features;
  for (const auto& q : dataset.queries) {
    query_features.insert(query_features.end(), q.features.begin(), q.features.end());
  }
  if (!query_features.empty()) {
    report.error_profile = approx_error_profile(query_features, library, nullptr, cfg.threads);
  }

  report.anr = anr(report.rankings, dataset.relevance);
  report.map = mean_average_precision(report.rankings, dataset.relevance);

  std::map<std::pair<DomainLabel, DomainLabel>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < nq; ++i) {
    const RankedResult& r = report.rankings[i];
    const auto& rel = dataset.relevance.relevant.at(r.query_id);
    QueryOutcome o;
    o.query_id = r.query_id;
    o.query_domain = dataset.queries[i].domain;
    o.database_domain = db_domain.contains(rel.front()) ? db_domain.at(rel.front())
                                                        : DomainLabel{};
    o.db_size = r.entries.size();
    o.best_rank = best_relevant_rank(r, rel);
    o.average_precision = average_precision(r, rel);
    o.top.assign(r.entries.begin(),
                 r.entries.begin() + std::min<std::size_t>(5, r.entries.size()));
    groups[{o.query_domain, o.database_domain}].push_back(i);
    report.queries.push_back(std::move(o));
  }
  for (const auto& [key, members] : groups) {
    std::vector<RankedResult> subset;
    for (std::size_t i : members) subset.push_back(report.rankings[i]);
    report.grid.push_back({key.first, key.second, members.size(),
                           anr(subset, dataset.relevance),
                           mean_average_precision(subset, dataset.relevance)});
  }
  return report;
}

json ExperimentReport::to_json() const {
  json doc;
  doc["method"] = std::string(method_token(method));
  doc["config"] = {
      {"k", config.miner.k},
      {"k_prime", config.miner.k_prime},
      {"d0", config.miner.d0},
      {"levels", method == Method::kNbnnSd ? 0 : config.pyramid.levels},
      {"vocabulary", std::string(vocabulary_kind_token(config.vocabulary))},
      {"num_words", config.kmeans.num_words},
      {"kmeans_seed", config.kmeans.seed},
      {"kmeans_max_iters", config.kmeans.max_iters},
  };
  doc["library_size"] = library_size;
  doc["library_fingerprint"] = library_fingerprint;
  doc["database_size"] = database_size;
  doc["num_queries"] = queries.size();
  doc["anr"] = anr;
  doc["map"] = map;
  json per_query = json::array();
  for (const auto& q : queries) {
    json top = json::array();
    for (const auto& s : q.top) top.push_back({{"image_id", s.image_id}, {"score", s.score}});
    per_query.push_back({{"query_id", q.query_id},
                         {"query_domain", domain_json(q.query_domain)},
                         {"database_domain", domain_json(q.database_domain)},
                         {"db_size", q.db_size},
                         {"best_rank", q.best_rank},
                         {"average_precision", q.average_precision},
                         {"top", std::move(top)}});
  }
  doc["queries"] = std::move(per_query);
  json grid_json = json::array();
  for (const auto& g : grid) {
    grid_json.push_back({{"query_domain", domain_json(g.query_domain)},
                         {"database_domain", domain_json(g.database_domain)},
                         {"queries", g.queries},
                         {"anr", g.anr},
                         {"map", g.map}});
  }
  doc["grid"] = std::move(grid_json);
  doc["error_profile_deciles"] = error_profile.distances.empty()
                                     ? json::array()
                                     : json(error_profile.deciles());
  json usage_json = json::array();
  for (const auto& [qd, row] : usage.counts) {
    for (const auto& [ld, c] : row) {
      usage_json.push_back({{"query_domain", domain_json(qd)},
                            {"library_domain", domain_json(ld)},
                            {"count", c}});
    }
  }
  doc["usage_histogram"] = std::move(usage_json);
  json subs = json::array();
  for (const auto& s : subimages) {
    json pairs = json::array();
    for (const auto& p : s.pairs) {
      pairs.push_back({{"level", p.level},
                       {"cell", p.cell},
                       {"raw", p.raw},
                       {"weighted", p.weighted},
                       {"box", {p.box.x0, p.box.y0, p.box.x1, p.box.y1}}});
    }
    subs.push_back({{"query_id", s.query_id},
                    {"candidate_id", s.candidate_id},
                    {"pairs", std::move(pairs)}});
  }
  doc["subimages"] = std::move(subs);
  return doc;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string method(method_token(report.method));
  open_out(dir / "report.json") << report.to_json().dump(2) << '\n';

  {
    auto out = open_out(dir / "per_query.csv");
    out << "query_id,query_domain,database_domain,db_size,best_rank,normalized_rank,"
           "average_precision\n";
    for (const auto& q : report.queries) {
      out << q.query_id << ',' << domain_string(q.query_domain) << ','
          << domain_string(q.database_domain) << ',' << q.db_size << ',' << q.best_rank
          << ','
          << format_double(100.0 * static_cast<double>(q.best_rank) /
                           static_cast<double>(q.db_size))
          << ',' << format_double(q.average_precision) << '\n';
    }
  }
  {
    auto out = open_out(dir / "rankings.tsv");
    out << "query_id\trank\timage_id\tscore\n";
    for (const auto& r : report.rankings) {
      for (std::size_t i = 0; i < r.entries.size(); ++i) {
        out << r.query_id << '\t' << i + 1 << '\t' << r.entries[i].image_id << '\t'
            << format_double(r.entries[i].score) << '\n';
      }
    }
  }
  for (const char* metric : {"anr", "map"}) {
    auto out = open_out(dir / (std::string(metric) + "_grid.csv"));
    out << "method,query_domain,database_domain,queries," << metric << '\n';
    for (const auto& g : report.grid) {
      out << method << ',' << domain_string(g.query_domain) << ','
          << domain_string(g.database_domain) << ',' << g.queries << ','
          << format_double(std::string(metric) == "anr" ? g.anr : g.map) << '\n';
    }
    out << method << ",all,all," << report.queries.size() << ','
        << format_double(std::string(metric) == "anr" ? report.anr : report.map) << '\n';
  }
  {
    auto out = open_out(dir / "error_profile.csv");
    out << "rank_percent,distance\n";
    const auto& prof = report.error_profile;
    for (std::size_t i = 0; i < prof.distances.size(); ++i) {
      out << format_double(prof.rank_percent(i)) << ','
          << format_double(prof.distances[i]) << '\n';
    }
  }
  {
    auto out = open_out(dir / "usage_histogram.csv");
    out << "query_domain,library_domain,count\n";
    for (const auto& [qd, row] : report.usage.counts) {
      for (const auto& [ld, c] : row) {
        out << domain_string(qd) << ',' << domain_string(ld) << ',' << c << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "subimages.csv");
    out << "query_id,candidate_id,position,level,cell,raw,weighted,x0,y0,x1,y1\n";
    for (const auto& s : report.subimages) {
      for (std::size_t i = 0; i < s.pairs.size(); ++i) {
        const auto& p = s.pairs[i];
        out << s.query_id << ',' << s.candidate_id << ',' << i + 1 << ',' << p.level << ','
            << p.cell << ',' << format_double(p.raw) << ',' << format_double(p.weighted)
            << ',' << format_double(p.box.x0) << ',' << format_double(p.box.y0) << ','
            << format_double(p.box.x1) << ',' << format_double(p.box.y1) << '\n';
      }
    }
  }
  {
    std::vector<double> t = report.query_seconds;
    std::sort(t.begin(), t.end());
    auto pct = [&](double p) {
      if (t.empty()) return 0.0;
      const auto i = static_cast<std::size_t>(p / 100.0 * static_cast<double>(t.size() - 1));
      return t[i];
    };
    json timing = {{"queries", t.size()},
                   {"p50_seconds", pct(50)},
                   {"p90_seconds", pct(90)},
                   {"p99_seconds", pct(99)},
                   {"max_seconds", t.empty() ? 0.0 : t.back()}};
    open_out(dir / "timing.json") << timing.dump(2) << '\n';
  }
}

json world_config_to_json(const SyntheticWorldConfig& cfg) {
  auto transform = [](const DomainTransform& t) {
    return json{{"noise_sigma", t.noise_sigma},
                {"dropout", t.dropout},
                {"replacement", t.replacement},
                {"jitter", t.jitter}};
  };
  return {{"num_places", cfg.num_places},
          {"features_per_image", cfg.features_per_image},
          {"dim", cfg.dim},
          {"num_patterns", cfg.num_patterns},
          {"pattern_norm", cfg.pattern_norm},
          {"place_variation", cfg.place_variation},
          {"season_gain", cfg.season_gain},
          {"num_routes", cfg.num_routes},
          {"route", cfg.route},
          {"query_season", std::string(season_token(cfg.query_season))},
          {"database_season", std::string(season_token(cfg.database_season))},
          {"library_images_per_domain", cfg.library_images_per_domain},
          {"query", transform(cfg.query)},
          {"database", transform(cfg.database)},
          {"library", transform(cfg.library)},
          {"layout_distractors", cfg.layout_distractors},
          {"random_distractors", cfg.random_distractors},
          {"relevance_radius", cfg.relevance_radius},
          {"seed", cfg.seed}};
}

SyntheticWorldConfig world_config_from_json(const json& doc) {
  SyntheticWorldConfig cfg;
  auto transform = [](const json& j, DomainTransform t) {
    t.noise_sigma = j.value("noise_sigma", t.noise_sigma);
    t.dropout = j.value("dropout", t.dropout);
    t.replacement = j.value("replacement", t.replacement);
    t.jitter = j.value("jitter", t.jitter);
    return t;
  };
  try {
    cfg.num_places = doc.value("num_places", cfg.num_places);
    cfg.features_per_image = doc.value("features_per_image", cfg.features_per_image);
    cfg.dim = doc.value("dim", cfg.dim);
    cfg.num_patterns = doc.value("num_patterns", cfg.num_patterns);
    cfg.pattern_norm = doc.value("pattern_norm", cfg.pattern_norm);
    cfg.place_variation = doc.value("place_variation", cfg.place_variation);
    cfg.season_gain = doc.value("season_gain", cfg.season_gain);
    cfg.num_routes = doc.value("num_routes", cfg.num_routes);
    cfg.route = doc.value("route", cfg.route);
    if (doc.contains("query_season")) {
      cfg.query_season = parse_season(doc.at("query_season").get<std::string>());
    }
    if (doc.contains("database_season")) {
      cfg.database_season = parse_season(doc.at("database_season").get<std::string>());
    }
    cfg.library_images_per_domain =
        doc.value("library_images_per_domain", cfg.library_images_per_domain);
    if (doc.contains("query")) cfg.query = transform(doc.at("query"), cfg.query);
    if (doc.contains("database")) cfg.database = transform(doc.at("database"), cfg.database);
    if (doc.contains("library")) cfg.library = transform(doc.at("library"), cfg.library);
    cfg.layout_distractors = doc.value("layout_distractors", cfg.layout_distractors);
    cfg.random_distractors = doc.value("random_distractors", cfg.random_distractors);
    cfg.relevance_radius = doc.value("relevance_radius", cfg.relevance_radius);
    cfg.seed = doc.value("seed", cfg.seed);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kFormat, std::string("world config: ") + ex.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace xdloc

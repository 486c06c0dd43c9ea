// Acceptance suite: one PASS/FAIL line per primary criterion.

#include <algorithm>
#include <array>
#include <chrono>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "oracles.h"
#include "test_util.h"
#include "xdloc/exact_scan.h"
#include "xdloc/experiment.h"
#include "xdloc/inverted_index.h"
#include "xdloc/knn_miner.h"
#include "xdloc/metrics.h"
#include "xdloc/nn_descriptor.h"
#include "xdloc/spm_matcher.h"
#include "xdloc/synthetic_world.h"

namespace xdloc {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failure message; later ones are counted only.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_++ == 0) first_ = what;
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    return failures_ == 0 ? "" : std::to_string(failures_) + " mismatches, first: " + first_;
  }

 private:
  int failures_ = 0;
  std::string first_;
};

// ---------------------------------------------------------------------------

Outcome knn_exactness() {
  std::mt19937_64 rng(20240101);
  Check check;
  const auto t0 = Clock::now();
  std::size_t ties = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t dim = std::array<std::size_t, 3>{2, 8, 128}[inst % 3];
    const std::size_t v = std::uniform_int_distribution<std::size_t>(1, 2000)(rng);
    const bool integer = inst % 2 == 0;
    std::vector<float> data;
    if (integer) {
      data = testing::random_int_vectors(rng, v, dim, dim == 2 ? 6 : 2);
    } else {
      std::uniform_real_distribution<float> u(0.0f, 255.0f);
      data.resize(v * dim);
      for (auto& x : data) x = u(rng);
    }
    std::vector<Provenance> prov(v);
    const std::size_t sources = 1 + v / 25;
    for (std::size_t i = 0; i < v; ++i) prov[i].source_image = static_cast<ImageId>(i % sources);
    const ExperienceLibrary lib(dim, data, prov);
    const KnnMiner miner(lib);

    SourceExclusion excl;
    std::vector<bool> excluded;
    if (inst % 4 == 1 && sources > 1) {
      excl.insert(0);
      excluded.resize(v);
      for (std::size_t i = 0; i < v; ++i) excluded[i] = prov[i].source_image == 0;
    }
    const auto available = excluded.empty()
                               ? v
                               : static_cast<std::size_t>(
                                     std::count(excluded.begin(), excluded.end(), false));
    const int k = static_cast<int>(
        std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(available, 20))(rng));
    for (int q = 0; q < 5; ++q) {
      std::vector<float> query(dim);
      if (q == 0) {
        const auto row = lib.descriptor(static_cast<LibraryId>(1 + rng() % v));
        query.assign(row.begin(), row.end());
      } else if (integer) {
        query = testing::random_int_vectors(rng, 1, dim, dim == 2 ? 6 : 2);
      } else {
        std::uniform_real_distribution<float> u(0.0f, 255.0f);
        for (auto& x : query) x = u(rng);
      }
      const auto got = miner.mine(query, k, excl.empty() ? nullptr : &excl);
      const auto want = oracle::knn(data, dim, query, k, excluded);
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < want.size(); ++i) {
        same = got[i].id == want[i].id && got[i].sq_distance == want[i].sq;
        if (i > 0 && want[i].sq == want[i - 1].sq) ++ties;
      }
      check.expect(same, "instance " + std::to_string(inst) + " query " + std::to_string(q));
    }
  }
  const double secs = seconds_since(t0);
  check.expect(secs < 10.0, "runtime " + std::to_string(secs) + " s");
  std::ostringstream d;
  d << "200 instances x 5 queries, " << ties << " tied neighbour pairs, " << secs << " s";
  return {check.ok(), check.ok() ? d.str() : check.summary()};
}

// ---------------------------------------------------------------------------

struct ScoringWorld {
  std::unique_ptr<ExperienceLibrary> library;
  std::vector<SceneDescriptor> database;
  std::vector<SceneDescriptor> queries;
  int levels = 0;
};

// Random library and images described by the real miner. Integer descriptors
// keep every similarity an integer, so all sums are exact.
ScoringWorld random_scoring_world(std::mt19937_64& rng, int levels) {
  ScoringWorld w;
  w.levels = levels;
  const std::size_t dim = 8;
  const std::size_t v = std::uniform_int_distribution<std::size_t>(50, 500)(rng);
  auto data = testing::random_int_vectors(rng, v, dim, 12);
  w.library = std::make_unique<ExperienceLibrary>(dim, std::move(data), std::vector<Provenance>(v));
  const KnnMiner miner(*w.library);
  // D0^2 near the typical neighbour distance so that some weights truncate.
  const MinerConfig cfg{10, 3, 11.0};
  const PyramidConfig pyr{levels};
  const int db_images = std::uniform_int_distribution<int>(1, 10)(rng);
  for (int i = 0; i < db_images; ++i) {
    const auto n = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
    w.database.push_back(describe_database(testing::random_image(rng, 10 * i + 3, n, dim, 12),
                                           miner, cfg, pyr));
  }
  for (int q = 0; q < 3; ++q) {
    const auto n = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
    w.queries.push_back(
        describe_query(testing::random_image(rng, 1000 + q, n, dim, 12), miner, cfg, pyr));
  }
  return w;
}

struct ScoringStats {
  std::size_t pairs = 0;
  double max_rel_err = 0.0;
};

Outcome scoring_oracle(std::vector<ScoringWorld>& worlds, ScoringStats& stats) {
  Check check;
  std::size_t nonzero = 0;
  for (std::size_t wi = 0; wi < worlds.size(); ++wi) {
    const ScoringWorld& w = worlds[wi];
    const auto index = build_index(w.database, *w.library, {10, 3, 11.0}, {w.levels});
    const SpmMatcher matcher(index);
    for (const auto& q : w.queries) {
      const RankedResult got = matcher.rank(q);
      std::vector<oracle::Scored> want;
      for (const auto& d : w.database) {
        want.push_back(
            {d.image_id, oracle::kernel(oracle::level_sims(q, d, w.levels, w.library->size()))});
      }
      want = oracle::rank(want);
      check.expect(got.entries.size() == want.size(), "size in world " + std::to_string(wi));
      for (std::size_t i = 0; i < std::min(got.entries.size(), want.size()); ++i) {
        const double err = oracle::rel_err(got.entries[i].score, want[i].score);
        stats.max_rel_err = std::max(stats.max_rel_err, err);
        if (want[i].score > 0) ++nonzero;
        check.expect(got.entries[i].image_id == want[i].id,
                     "ranking order in world " + std::to_string(wi));
        check.expect(err <= 1e-9, "score in world " + std::to_string(wi));
      }
      stats.pairs += want.size();
    }
  }
  std::ostringstream d;
  d << worlds.size() << " worlds, " << stats.pairs << " query/image pairs (" << nonzero
    << " non-zero), max relative error " << stats.max_rel_err;
  return {check.ok(), check.ok() ? d.str() : check.summary()};
}

Outcome pyramid_properties(std::vector<ScoringWorld>& worlds) {
  Check check;
  std::size_t pairs = 0;
  double max_err = 0.0;
  std::size_t nbnn_rankings = 0;
  for (std::size_t wi = 0; wi < worlds.size(); ++wi) {
    const ScoringWorld& w = worlds[wi];
    const auto index = build_index(w.database, *w.library, {10, 3, 11.0}, {w.levels});
    const SpmMatcher matcher(index);
    for (const auto& q : w.queries) {
      for (const auto& d : w.database) {
        const auto I = matcher.level_similarities(q, d.image_id);
        for (std::size_t l = 1; l < I.size(); ++l) {
          check.expect(I[l - 1] >= I[l], "level monotonicity in world " + std::to_string(wi));
        }
        const double err = std::abs(pyramid_kernel(I) - oracle::kernel_new_matches(I)) /
                           std::max(1.0, std::abs(pyramid_kernel(I)));
        max_err = std::max(max_err, err);
        check.expect(err <= 1e-12, "new-matches form in world " + std::to_string(wi));
        ++pairs;
      }
      // Depth-0 scoring against pure image-to-class NBNN.
      const RankedResult got = matcher.rank(q, 0);
      std::vector<oracle::Scored> want;
      for (const auto& d : w.database) {
        want.push_back({d.image_id, oracle::nbnn(q, d, w.library->size())});
      }
      want = oracle::rank(want);
      bool same = got.entries.size() == want.size();
      for (std::size_t i = 0; same && i < want.size(); ++i) {
        same = got.entries[i].image_id == want[i].id && got.entries[i].score == want[i].score;
      }
      check.expect(same, "depth-0 ranking in world " + std::to_string(wi));
      ++nbnn_rankings;
    }
  }
  std::ostringstream d;
  d << pairs << " pairs monotone, kernel forms within " << max_err << ", " << nbnn_rankings
    << " depth-0 rankings equal NBNN";
  return {check.ok(), check.ok() ? d.str() : check.summary()};
}

// ---------------------------------------------------------------------------

Outcome metric_correctness() {
  Check check;
  std::mt19937_64 rng(4);
  std::vector<RankedResult> rankings;
  RelevanceSpec rel;
  std::vector<ImageId> order(1000);
  std::iota(order.begin(), order.end(), 0);
  for (ImageId q = 0; q < 1000; ++q) {
    std::shuffle(order.begin(), order.end(), rng);
    RankedResult r;
    r.query_id = q;
    for (ImageId id : order) r.entries.push_back({id, 0.0, {}});
    rankings.push_back(std::move(r));
    rel.relevant[q] = {static_cast<ImageId>(rng() % 1000)};
  }
  const double random_anr = anr(rankings, rel, 1000);
  check.expect(std::abs(random_anr - 50.0) <= 3.0, "random ANR " + std::to_string(random_anr));

  for (const auto& r : rankings) {
    const auto& relevant = rel.relevant.at(r.query_id);
    const double ap = average_precision(r, relevant);
    check.expect(ap == 1.0 / static_cast<double>(*r.rank_of(relevant[0])), "AP != 1/rank");
  }

  auto cfg = SyntheticWorldConfig::noiseless();
  cfg.num_places = 100;
  cfg.library_images_per_domain = 20;
  const auto data = generate_world(cfg);
  ExperimentConfig exp;
  exp.threads = 0;
  const auto report = run_experiment(data, exp);
  check.expect(report.anr == 100.0 / static_cast<double>(data.database.size()),
               "noiseless ANR " + std::to_string(report.anr));
  check.expect(report.map == 1.0, "noiseless mAP " + std::to_string(report.map));

  std::ostringstream d;
  d << "random ANR " << random_anr << ", AP = 1/rank on 1000 rankings, noiseless world ANR "
    << report.anr << " (100/" << data.database.size() << "), mAP " << report.map;
  return {check.ok(), check.ok() ? d.str() : check.summary()};
}

// ---------------------------------------------------------------------------

// Mean ANR of each method on one generated world (100 places, sigma 30).
std::array<double, 3> method_anrs(const SyntheticWorldConfig& cfg, bool with_nbnn) {
  const auto data = generate_world(cfg);
  std::array<double, 3> out{};
  const Method methods[3] = {Method::kCdSd, Method::kNbnnSd, Method::kTfIdf};
  for (int m = 0; m < 3; ++m) {
    if (!with_nbnn && methods[m] == Method::kNbnnSd) continue;
    ExperimentConfig exp;
    exp.method = methods[m];
    exp.threads = 0;
    out[m] = run_experiment(data, exp).anr;
  }
  return out;
}

Outcome method_ordering() {
  const auto t0 = Clock::now();
  SyntheticWorldConfig layout;  // cross-domain library, sigma 30 on query and database
  layout.num_places = 100;
  layout.layout_distractors = 1;
  layout.seed = 7;
  SyntheticWorldConfig plain = layout;
  plain.layout_distractors = 0;

  const auto a = method_anrs(layout, true);
  const auto b = method_anrs(plain, false);
  const double secs = seconds_since(t0);
  Check check;
  check.expect(a[0] < a[1], "CD-SD not better than NBNN-SD on the layout-sensitive world");
  check.expect(a[0] < a[2], "CD-SD not better than TF-IDF on the layout-sensitive world");
  check.expect(b[0] < b[2], "CD-SD not better than TF-IDF on the plain world");
  check.expect(secs < 300.0, "runtime over 5 min");
  std::ostringstream d;
  d << "layout-sensitive world ANR CD-SD " << a[0] << " < NBNN-SD " << a[1] << ", TF-IDF "
    << a[2] << "; plain world CD-SD " << b[0] << " < TF-IDF " << b[2]
    << " (100 queries each, sigma " << layout.query.noise_sigma << ", " << secs << " s)";
  return {check.ok(), d.str() + (check.ok() ? "" : "; " + check.summary())};
}

// ---------------------------------------------------------------------------

Outcome error_profile_dominance() {
  Check check;
  std::ostringstream d;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    SyntheticWorldConfig cfg;
    cfg.seed = seed;
    const auto data = generate_world(cfg);
    std::vector<Feature> features;
    for (const auto& q : data.queries) {
      features.insert(features.end(), q.features.begin(), q.features.end());
    }
    const DomainLabel query_domain{cfg.query_season, cfg.route};
    const std::vector<DomainLabel> inputs = {query_domain,
                                             {cfg.database_season, cfg.route}};
    const auto cross = build_library(
        data.library, make_vocabulary_filter(VocabularyKind::kCrossDomain, inputs));
    const auto same = build_library(
        data.library, [&](const DomainLabel& dl) { return dl == query_domain; });
    const auto cd = approx_error_profile(features, cross, nullptr, 0).deciles();
    const auto sd = approx_error_profile(features, same, nullptr, 0).deciles();
    for (std::size_t i = 0; i < cd.size(); ++i) {
      check.expect(cd[i] >= sd[i], "seed " + std::to_string(seed) + " decile " +
                                       std::to_string(i * 10));
    }
    d << "seed " << seed << " median CD " << cd[5] << " vs SD " << sd[5] << "; ";
  }
  d << "all 11 deciles dominate";
  return {check.ok(), check.ok() ? d.str() : check.summary()};
}

// ---------------------------------------------------------------------------

Outcome performance_budget() {
  std::mt19937_64 rng(8);
  const std::size_t v = 100'000, dim = 128;
  std::normal_distribution<float> g(0.0f, 1.0f);
  // SIFT-like library: non-negative components around a shared mean.
  std::vector<float> data(v * dim);
  for (auto& x : data) x = std::clamp(std::round(40.0f + 30.0f * g(rng)), 0.0f, 255.0f);
  const ExperienceLibrary lib(dim, std::move(data), std::vector<Provenance>(v));
  const KnnMiner miner(lib);

  ImageRecord query;
  query.image_id = 1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    Feature f;
    f.pos = {unit(rng), unit(rng)};
    const auto row = lib.descriptor(static_cast<LibraryId>(1 + rng() % v));
    f.desc.assign(row.begin(), row.end());
    for (auto& x : f.desc) x = std::clamp(std::round(x + 10.0f * g(rng)), 0.0f, 255.0f);
    query.features.push_back(std::move(f));
  }

  // Database descriptors with K' = 3 uniformly random library ids each.
  std::vector<SceneDescriptor> db(1000);
  std::uniform_int_distribution<LibraryId> id(1, static_cast<LibraryId>(v));
  for (int i = 0; i < 1000; ++i) {
    auto& d = db[i];
    d.image_id = i;
    d.role = DescriptorRole::kDatabase;
    d.pyramid = {2};
    d.library_fingerprint = lib.fingerprint();
    for (int f = 0; f < 300; ++f) {
      FeatureRecord rec;
      rec.pos = {unit(rng), unit(rng)};
      rec.finest_cell = cell_of(rec.pos, 2);
      for (int k = 0; k < 3; ++k) rec.entries.push_back({id(rng), 1.0});
      d.features.push_back(std::move(rec));
    }
  }
  const auto index = build_index(db, lib, {}, {2});
  const SpmMatcher matcher(index);

  auto t0 = Clock::now();
  const auto explanations = miner.mine_batch(query.features, 10, nullptr, 1);
  const double mining = seconds_since(t0);

  t0 = Clock::now();
  const auto described = describe_query(query, miner, {}, {2}, 1);
  const auto ranking = matcher.rank(described);
  const double end_to_end = seconds_since(t0);

  t0 = Clock::now();
  const auto ranking_only = matcher.rank(described);
  const double scoring = seconds_since(t0);

  Check check;
  check.expect(explanations.size() == 300, "explanations");
  check.expect(ranking.entries.size() == 1000 && ranking == ranking_only, "ranking");
  check.expect(mining < 2.0, "mining " + std::to_string(mining) + " s");
  check.expect(scoring < 1.0, "query " + std::to_string(scoring) + " s");
  std::ostringstream d;
  d << "single thread: mining 300 x 100k exact " << mining << " s (< 2), query scoring over "
    << index.total_postings() << " postings " << scoring
    << " s (< 1, excludes mining); describe + rank " << end_to_end << " s";
  return {check.ok(), check.ok() ? d.str() : d.str() + "; " + check.summary()};
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> report_files(const ExperimentReport& r) {
  testing::TempDir dir;
  write_report(r, dir.path());
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    const auto name = e.path().filename().string();
    if (name != "timing.json") out[name] = testing::read_file(e.path());
  }
  return out;
}

Outcome determinism() {
  SyntheticWorldConfig cfg;
  cfg.num_places = 40;
  cfg.layout_distractors = 1;
  cfg.random_distractors = 10;
  cfg.seed = 99;
  Check check;
  std::size_t files = 0;
  for (Method m : {Method::kCdSd, Method::kNbnnSd, Method::kTfIdf}) {
    std::map<std::string, std::string> first;
    for (int threads : {1, 4, 1, 3}) {
      ExperimentConfig exp;
      exp.method = m;
      exp.threads = threads;
      exp.kmeans.num_words = 300;
      // Regenerate the world every run so generation is covered too.
      const auto files_now = report_files(run_experiment(generate_world(cfg), exp));
      if (first.empty()) {
        first = files_now;
        files += first.size();
      } else {
        check.expect(files_now == first, std::string(method_token(m)) + " threads " +
                                             std::to_string(threads));
      }
    }
  }
  std::ostringstream d;
  d << files << " report files byte-identical over 4 runs each (threads 1, 4, 1, 3)";
  return {check.ok(), check.ok() ? d.str() : check.summary()};
}

}  // namespace
}  // namespace xdloc

int main() {
  using namespace xdloc;
  std::mt19937_64 rng(31337);
  std::vector<ScoringWorld> worlds;
  for (int i = 0; i < 50; ++i) worlds.push_back(random_scoring_world(rng, i % 3));
  ScoringStats stats;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 k-NN exactness", knn_exactness},
      {"2 scoring oracle equivalence", [&] { return scoring_oracle(worlds, stats); }},
      {"3 pyramid properties", [&] { return pyramid_properties(worlds); }},
      {"4 metric correctness", metric_correctness},
      {"5 method ordering", method_ordering},
      {"6 cross-domain error profile", error_profile_dominance},
      {"7 performance budget", performance_budget},
      {"8 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all primary criteria passed" : std::to_string(failed) + " failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}

#include "xdloc/bow_baseline.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "xdloc/binary_io.h"
#include "xdloc/error.h"
#include "xdloc/exact_scan.h"

namespace xdloc {
namespace {

constexpr std::uint32_t kVocabularyFormatVersion = 1;

std::vector<ScanHit> assign(std::span<const float> centroids, std::size_t dim,
                            std::span<const float* const> points, int threads) {
  auto hits = exact_knn(centroids, dim, points, 1, {}, threads);
  std::vector<ScanHit> out;
  out.reserve(hits.size());
  for (auto& h : hits) out.push_back(h.front());
  return out;
}

}  // namespace

Vocabulary::Vocabulary(std::size_t dim, std::vector<float> centroids,
                       std::uint64_t seed, std::uint64_t training_fingerprint,
                       std::vector<double> objective_history)
    : dim_(dim),
      centroids_(std::move(centroids)),
      seed_(seed),
      training_fingerprint_(training_fingerprint),
      objective_history_(std::move(objective_history)) {
  if (dim_ == 0 || centroids_.empty() || centroids_.size() % dim_ != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "vocabulary block is not W x d");
  }
  for (float v : centroids_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "vocabulary centroid is not finite");
    }
  }
}

std::vector<std::uint32_t> Vocabulary::quantize(std::span<const Feature> features,
                                                int threads) const {
  std::vector<const float*> points;
  points.reserve(features.size());
  for (const Feature& f : features) {
    if (f.desc.size() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "feature dimension " + std::to_string(f.desc.size()) +
                      " does not match vocabulary dimension " + std::to_string(dim_));
    }
    points.push_back(f.desc.data());
  }
  std::vector<std::uint32_t> words;
  words.reserve(points.size());
  for (const ScanHit& h : assign(centroids_, dim_, points, threads)) {
    words.push_back(h.index);
  }
  return words;
}

Vocabulary train_vocabulary(const ExperienceLibrary& library,
                            const KMeansOptions& options) {
  const std::size_t n = library.size();
  const std::size_t dim = library.dim();
  const std::size_t w = options.num_words;
  if (w < 1 || w > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "vocabulary size " + std::to_string(w) + " needs 1 <= W <= V = " +
                    std::to_string(n));
  }
  const auto data = library.data();

  // W distinct points by a seeded partial Fisher-Yates shuffle.
  std::mt19937_64 rng(options.seed);
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(perm[i], perm[j]);
  }
  std::vector<float> centroids(w * dim);
  for (std::size_t c = 0; c < w; ++c) {
    std::copy_n(data.begin() + perm[c] * dim, dim, centroids.begin() + c * dim);
  }

  std::vector<const float*> points(n);
  for (std::size_t i = 0; i < n; ++i) points[i] = data.data() + i * dim;

  std::vector<double> history;
  std::vector<double> sums(w * dim);
  std::vector<std::size_t> counts(w);
  for (int iter = 0; iter < std::max(1, options.max_iters); ++iter) {
    const auto hits = assign(centroids, dim, points, options.threads);
    double objective = 0.0;
    for (const ScanHit& h : hits) objective += h.sq_distance;
    history.push_back(objective);
    if (history.size() >= 2) {
      const double prev = history[history.size() - 2];
      if (prev - objective <= options.tol * prev) break;
    }
    if (objective == 0.0) break;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = hits[i].index;
      ++counts[c];
      const float* p = points[i];
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += p[j];
    }
    std::vector<std::uint32_t> farthest;
    for (std::size_t c = 0; c < w; ++c) {
      if (counts[c] == 0) {
        if (farthest.empty()) {
          farthest.resize(n);
          std::iota(farthest.begin(), farthest.end(), 0u);
          std::stable_sort(farthest.begin(), farthest.end(),
                           [&](std::uint32_t a, std::uint32_t b) {
                             return hits[a].sq_distance > hits[b].sq_distance;
                           });
          std::reverse(farthest.begin(), farthest.end());
        }
        const std::uint32_t p = farthest.back();
        farthest.pop_back();
        std::copy_n(points[p], dim, centroids.begin() + c * dim);
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        centroids[c * dim + j] =
            static_cast<float>(sums[c * dim + j] / static_cast<double>(counts[c]));
      }
    }
  }
  return Vocabulary(dim, std::move(centroids), options.seed, library.fingerprint(),
                    std::move(history));
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic("XDVW");
  w.u32(kVocabularyFormatVersion);
  w.u32(static_cast<std::uint32_t>(vocab.size()));
  w.u32(static_cast<std::uint32_t>(vocab.dim()));
  w.u64(vocab.seed());
  w.u64(vocab.training_fingerprint());
  w.f32_array(vocab.data());
  w.finish();
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic("XDVW");
  const std::uint32_t version = r.u32();
  if (version != kVocabularyFormatVersion) {
    throw Error(ErrorCode::kFormat, path.string() + ": unsupported vocabulary version " +
                                        std::to_string(version));
  }
  const std::uint32_t words = r.u32();
  const std::uint32_t dim = r.u32();
  const std::uint64_t seed = r.u64();
  const std::uint64_t fp = r.u64();
  if (words == 0 || dim == 0) {
    throw Error(ErrorCode::kFormat, path.string() + ": empty vocabulary");
  }
  std::vector<float> centroids(static_cast<std::size_t>(words) * dim);
  r.f32_array(centroids);
  r.expect_end();
  return Vocabulary(dim, std::move(centroids), seed, fp);
}

double BowVector::dot(const BowVector& other) const {
  double s = 0.0;
  std::size_t j = 0;
  for (const auto& [word, weight] : terms) {
    while (j < other.terms.size() && other.terms[j].first < word) ++j;
    if (j < other.terms.size() && other.terms[j].first == word) {
      s += weight * other.terms[j].second;
    }
  }
  return s;
}

BowIndex::BowIndex(const Vocabulary& vocab, std::span<const ImageRecord> database,
                   int threads)
    : vocab_(vocab), idf_(vocab.size(), 0.0), postings_(vocab.size()) {
  std::vector<std::vector<std::uint32_t>> doc_words;
  doc_words.reserve(database.size());
  std::vector<std::size_t> df(vocab.size(), 0);
  for (const ImageRecord& img : database) {
    doc_ids_.push_back(img.image_id);
    auto words = vocab.quantize(img.features, threads);
    std::vector<std::uint32_t> unique = words;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (std::uint32_t wd : unique) ++df[wd];
    doc_words.push_back(std::move(words));
  }
  const double docs = static_cast<double>(database.size());
  for (std::size_t wd = 0; wd < idf_.size(); ++wd) {
    idf_[wd] = std::log((1.0 + docs) / (1.0 + static_cast<double>(df[wd]))) + 1.0;
  }
  for (std::size_t d = 0; d < doc_words.size(); ++d) {
    for (const auto& [word, weight] : weigh(doc_words[d]).terms) {
      postings_[word].emplace_back(static_cast<std::uint32_t>(d), weight);
    }
  }
}

BowVector BowIndex::weigh(std::span<const std::uint32_t> words) const {
  std::map<std::uint32_t, double> tf;
  for (std::uint32_t w : words) tf[w] += 1.0;
  BowVector v;
  double norm2 = 0.0;
  for (const auto& [word, count] : tf) {
    const double x = count * idf_[word];
    v.terms.emplace_back(word, x);
    norm2 += x * x;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& t : v.terms) t.second *= inv;
  }
  return v;
}

BowVector BowIndex::vectorize(const ImageRecord& image) const {
  return weigh(vocab_.quantize(image.features));
}

RankedResult BowIndex::rank(const ImageRecord& query) const {
  const BowVector q = vectorize(query);
  std::vector<double> scores(doc_ids_.size(), 0.0);
  for (const auto& [word, weight] : q.terms) {
    for (const auto& [doc, dw] : postings_[word]) scores[doc] += weight * dw;
  }
  RankedResult result;
  result.query_id = query.image_id;
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    result.entries.push_back({doc_ids_[d], scores[d], {}});
  }
  sort_ranking(result.entries);
  return result;
}

RankedResult bow_rank(const ImageRecord& query, std::span<const ImageRecord> database,
                      const Vocabulary& vocab) {
  return BowIndex(vocab, database).rank(query);
}

}  // namespace xdloc

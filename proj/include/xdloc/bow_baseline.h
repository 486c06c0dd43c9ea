#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "xdloc/core_model.h"
#include "xdloc/experience_library.h"
#include "xdloc/spm_matcher.h"

namespace xdloc {

struct KMeansOptions {
  std::size_t num_words = 1000;
  std::uint64_t seed = 1;
  int max_iters = 20;
  double tol = 1e-4;  // relative objective improvement that counts as converged
  int threads = 1;
};

// Vector-quantization codebook (W x d centroids).
class Vocabulary {
 public:
  Vocabulary(std::size_t dim, std::vector<float> centroids, std::uint64_t seed,
             std::uint64_t training_fingerprint,
             std::vector<double> objective_history = {});

  std::size_t size() const { return dim_ == 0 ? 0 : centroids_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> centroid(std::size_t word) const {
    return {centroids_.data() + word * dim_, dim_};
  }
  std::span<const float> data() const { return centroids_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t training_fingerprint() const { return training_fingerprint_; }
  // k-means objective (sum of squared distances) after each assignment step.
  std::span<const double> objective_history() const { return objective_history_; }

  // Nearest centroid per feature; ties go to the lower word index.
  std::vector<std::uint32_t> quantize(std::span<const Feature> features,
                                      int threads = 1) const;

  bool operator==(const Vocabulary& other) const {
    return dim_ == other.dim_ && centroids_ == other.centroids_ &&
           seed_ == other.seed_ && training_fingerprint_ == other.training_fingerprint_;
  }

 private:
  std::size_t dim_;
  std::vector<float> centroids_;
  std::uint64_t seed_;
  std::uint64_t training_fingerprint_;
  std::vector<double> objective_history_;
};

// Lloyd's k-means over the library descriptors. Initial centroids are W
// distinct library points drawn with `seed`; empty clusters are reseeded from
// the points farthest from their centroids. Throws Error(kInvalidArgument)
// when V < W.
Vocabulary train_vocabulary(const ExperienceLibrary& library,
                            const KMeansOptions& options);

// "XDVW" block: magic, version u32, W u32, d u32, seed u64,
// training fingerprint u64, W x d f32.
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

// Sparse tf-idf vector sorted by word, L2-normalized (all-zero when empty).
struct BowVector {
  std::vector<std::pair<std::uint32_t, double>> terms;

  double dot(const BowVector& other) const;
};

// TF-IDF retrieval over a fixed database. idf = ln((1 + #docs) / (1 + df)) + 1.
class BowIndex {
 public:
  BowIndex(const Vocabulary& vocab, std::span<const ImageRecord> database,
           int threads = 1);

  BowVector vectorize(const ImageRecord& image) const;
  // Cosine similarity ranking over every database image.
  RankedResult rank(const ImageRecord& query) const;

  std::size_t size() const { return doc_ids_.size(); }
  double idf(std::uint32_t word) const { return idf_[word]; }

 private:
  BowVector weigh(std::span<const std::uint32_t> words) const;

  const Vocabulary& vocab_;
  std::vector<ImageId> doc_ids_;
  std::vector<double> idf_;
  // word -> (doc ordinal, weight)
  std::vector<std::vector<std::pair<std::uint32_t, double>>> postings_;
};

RankedResult bow_rank(const ImageRecord& query, std::span<const ImageRecord> database,
                      const Vocabulary& vocab);

}  // namespace xdloc

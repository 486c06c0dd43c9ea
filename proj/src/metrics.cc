#include "xdloc/metrics.h"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "xdloc/error.h"

namespace xdloc {
namespace {

std::span<const ImageId> relevant_for(const RelevanceSpec& relevance, ImageId query) {
  auto it = relevance.relevant.find(query);
  if (it == relevance.relevant.end() || it->second.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "query " + std::to_string(query) + " has no relevant images");
  }
  return it->second;
}

}  // namespace

std::vector<ImageId> window_relevance(ImageId center, int radius,
                                      const std::vector<ImageId>& database_ids) {
  std::vector<ImageId> out;
  for (ImageId id : database_ids) {
    if (id >= center - radius && id <= center + radius) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t best_relevant_rank(const RankedResult& ranking,
                               std::span<const ImageId> relevant) {
  if (relevant.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "query " + std::to_string(ranking.query_id) + " has no relevant images");
  }
  const std::unordered_set<ImageId> wanted(relevant.begin(), relevant.end());
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    if (wanted.contains(ranking.entries[i].image_id)) return i + 1;
  }
  throw Error(ErrorCode::kNotFound, "no relevant image in ranking of query " +
                                        std::to_string(ranking.query_id));
}

double average_precision(const RankedResult& ranking, std::span<const ImageId> relevant) {
  if (relevant.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "query " + std::to_string(ranking.query_id) + " has no relevant images");
  }
  const std::unordered_set<ImageId> wanted(relevant.begin(), relevant.end());
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    if (wanted.contains(ranking.entries[i].image_id)) {
      hits += 1.0;
      sum += hits / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(wanted.size());
}

double anr(std::span<const RankedResult> rankings, const RelevanceSpec& relevance,
           std::optional<std::size_t> db_size) {
  if (rankings.empty()) return 0.0;
  if (db_size && *db_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "database size must be positive");
  }
  double sum = 0.0;
  for (const RankedResult& r : rankings) {
    const std::size_t rank = best_relevant_rank(r, relevant_for(relevance, r.query_id));
    const std::size_t size = db_size.value_or(r.entries.size());
    sum += 100.0 * static_cast<double>(rank) / static_cast<double>(size);
  }
  return sum / static_cast<double>(rankings.size());
}

double mean_average_precision(std::span<const RankedResult> rankings,
                              const RelevanceSpec& relevance) {
  if (rankings.empty()) return 0.0;
  double sum = 0.0;
  for (const RankedResult& r : rankings) {
    sum += average_precision(r, relevant_for(relevance, r.query_id));
  }
  return sum / static_cast<double>(rankings.size());
}

}  // namespace xdloc

#include "xdloc/exact_scan.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "xdloc/parallel.h"

namespace xdloc {
namespace {

constexpr std::size_t kQueryBlock = 8;
constexpr std::size_t kPointBlock = 256;
constexpr std::size_t kLanes = 16;

float squared_distance_f32(const float* a, const float* b, std::size_t dim) {
  float acc[kLanes] = {};
  std::size_t j = 0;
  for (; j + kLanes <= dim; j += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const float t = a[j + l] - b[j + l];
      acc[l] += t * t;
    }
  }
  float tail = 0.0f;
  for (; j < dim; ++j) {
    const float t = a[j] - b[j];
    tail += t * t;
  }
  float s = tail;
  for (std::size_t l = 0; l < kLanes; ++l) s += acc[l];
  return s;
}

struct QueryState {
  std::priority_queue<float> best;  // k smallest float distances, max on top
  std::vector<std::pair<float, std::uint32_t>> candidates;

  double bound(std::size_t k, double ratio, double slack) const {
    if (best.size() < k) return std::numeric_limits<double>::infinity();
    return static_cast<double>(best.top()) * ratio + slack;
  }

  void prune(double limit) {
    std::erase_if(candidates, [limit](const auto& c) {
      return static_cast<double>(c.first) > limit;
    });
  }
};

}  // namespace

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += t * t;
  }
  return s;
}

std::vector<std::vector<ScanHit>> exact_knn(
    std::span<const float> points, std::size_t dim,
    std::span<const float* const> queries, std::size_t k,
    std::span<const std::uint8_t> excluded, int threads) {
  const std::size_t n = dim == 0 ? 0 : points.size() / dim;
  std::vector<std::vector<ScanHit>> results(queries.size());
  if (k == 0 || queries.empty()) return results;

  // Relative error of a float sum of `dim` rounded squared differences,
  // against the exact value, plus the double re-score error; the absolute
  // slack covers gradual underflow of tiny squared differences.
  const double u = std::ldexp(1.0, -24);
  const double terms = static_cast<double>(dim + 4);
  const double eps = terms * u / (1.0 - terms * u) + terms * std::ldexp(1.0, -52);
  const double ratio = (1.0 + eps) / (1.0 - eps);
  const double slack =
      static_cast<double>(dim + 2) * std::numeric_limits<float>::min() * 4.0;
  const std::size_t prune_at = 4 * k + 1024;

  const std::size_t num_blocks = (queries.size() + kQueryBlock - 1) / kQueryBlock;
  parallel_for(num_blocks, threads, [&](std::size_t block) {
    const std::size_t q_begin = block * kQueryBlock;
    const std::size_t q_end = std::min(queries.size(), q_begin + kQueryBlock);
    std::vector<QueryState> states(q_end - q_begin);

    for (std::size_t p_begin = 0; p_begin < n; p_begin += kPointBlock) {
      const std::size_t p_end = std::min(n, p_begin + kPointBlock);
      for (std::size_t q = q_begin; q < q_end; ++q) {
        QueryState& st = states[q - q_begin];
        const float* query = queries[q];
        double limit = st.bound(k, ratio, slack);
        for (std::size_t p = p_begin; p < p_end; ++p) {
          if (!excluded.empty() && excluded[p]) continue;
          const float f = squared_distance_f32(query, points.data() + p * dim, dim);
          if (static_cast<double>(f) > limit) continue;
          st.candidates.emplace_back(f, static_cast<std::uint32_t>(p));
          if (st.best.size() < k) {
            st.best.push(f);
          } else if (f < st.best.top()) {
            st.best.pop();
            st.best.push(f);
          }
          limit = st.bound(k, ratio, slack);
        }
        if (st.candidates.size() > prune_at) st.prune(limit);
      }
    }

    for (std::size_t q = q_begin; q < q_end; ++q) {
      QueryState& st = states[q - q_begin];
      st.prune(st.bound(k, ratio, slack));
      std::vector<ScanHit> hits;
      hits.reserve(st.candidates.size());
      const std::span<const float> query(queries[q], dim);
      for (const auto& [f, p] : st.candidates) {
        hits.push_back({p, squared_distance(query, points.subspan(p * dim, dim))});
      }
      const std::size_t keep = std::min(k, hits.size());
      std::partial_sort(hits.begin(), hits.begin() + keep, hits.end(),
                        [](const ScanHit& a, const ScanHit& b) {
                          if (a.sq_distance != b.sq_distance)
                            return a.sq_distance < b.sq_distance;
                          return a.index < b.index;
                        });
      hits.resize(keep);
      results[q] = std::move(hits);
    }
  });
  return results;
}

}  // namespace xdloc

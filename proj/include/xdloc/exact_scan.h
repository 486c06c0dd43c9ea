#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace xdloc {

// Canonical squared Euclidean distance: double accumulation in component
// order. Every exactness claim in the project refers to this value.
double squared_distance(std::span<const float> a, std::span<const float> b);

struct ScanHit {
  std::uint32_t index = 0;  // 0-based row of the point set
  double sq_distance = 0.0;

  bool operator==(const ScanHit&) const = default;
};

// Exact k-nearest-neighbour search of every query against a row-major point
// set, ordered by ascending canonical distance then ascending index.
//
// A vectorized single-precision pass keeps every point whose float distance
// lies within the floating-point error bound of the running k-th best; the
// survivors are re-scored with squared_distance(). The result is identical to
// a brute-force scan with squared_distance().
//
// `excluded`, when non-empty, has one flag per point; flagged points are never
// returned. Requires k <= number of non-excluded points.
std::vector<std::vector<ScanHit>> exact_knn(
    std::span<const float> points, std::size_t dim,
    std::span<const float* const> queries, std::size_t k,
    std::span<const std::uint8_t> excluded = {}, int threads = 1);

}  // namespace xdloc

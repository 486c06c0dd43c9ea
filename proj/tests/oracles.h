#pragma once

// Brute-force reference implementations used to check the optimized paths.
// They share no code with the library beyond its plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "xdloc/core_model.h"
#include "xdloc/nn_descriptor.h"

namespace xdloc::oracle {

struct Hit {
  std::uint32_t id;  // 1-based
  double sq;
  bool operator==(const Hit&) const = default;
};

// Squared distance summed in coordinate order in double precision.
inline double sq_dist(const float* a, const float* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double t = double(a[i]) - double(b[i]);
    s += t * t;
  }
  return s;
}

// Full scan, full sort by (distance, id), first k.
inline std::vector<Hit> knn(const std::vector<float>& data, std::size_t dim,
                            const std::vector<float>& q, int k,
                            const std::vector<bool>& excluded = {}) {
  std::vector<Hit> all;
  const std::size_t n = data.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    if (!excluded.empty() && excluded[i]) continue;
    all.push_back({static_cast<std::uint32_t>(i + 1), sq_dist(&data[i * dim], q.data(), dim)});
  }
  std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    return a.sq != b.sq ? a.sq < b.sq : a.id < b.id;
  });
  all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(k)));
  return all;
}

// Dense V-dimensional feature vector: truncated similarities for a query
// feature, indicator for a database feature.
inline std::vector<double> dense(const FeatureRecord& f, std::size_t vocab) {
  std::vector<double> v(vocab + 1, 0.0);
  for (const auto& e : f.entries) v[e.id] = e.weight;
  return v;
}

// Feature similarity as the maximum of element-wise products.
inline double feature_sim(const std::vector<double>& q, const std::vector<double>& d) {
  double best = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) best = std::max(best, q[i] * d[i]);
  return best;
}

inline std::uint32_t grid_cell(Point p, int level) {
  const int side = 1 << level;
  int cx = static_cast<int>(p.x * side);
  int cy = static_cast<int>(p.y * side);
  cx = std::clamp(cx, 0, side - 1);
  cy = std::clamp(cy, 0, side - 1);
  return static_cast<std::uint32_t>(cy * side + cx);
}

// I_l: every query feature takes its best match among candidate features in
// the same level-l cell, summed over the image.
inline double level_sim(const SceneDescriptor& query, const SceneDescriptor& db,
                        int level, std::size_t vocab) {
  double total = 0.0;
  for (const auto& qf : query.features) {
    const auto qv = dense(qf, vocab);
    double best = 0.0;
    for (const auto& df : db.features) {
      if (grid_cell(qf.pos, level) != grid_cell(df.pos, level)) continue;
      best = std::max(best, feature_sim(qv, dense(df, vocab)));
    }
    total += best;
  }
  return total;
}

inline std::vector<double> level_sims(const SceneDescriptor& query, const SceneDescriptor& db,
                                      int levels, std::size_t vocab) {
  std::vector<double> out;
  for (int l = 0; l <= levels; ++l) out.push_back(level_sim(query, db, l, vocab));
  return out;
}

// K = I_0 / 2^L + sum_{l>=1} I_l / 2^(L-l+1).
inline double kernel(const std::vector<double>& I) {
  const int L = static_cast<int>(I.size()) - 1;
  double k = I[0] / double(1u << L);
  for (int l = 1; l <= L; ++l) k += I[l] / double(1u << (L - l + 1));
  return k;
}

// Same kernel written as finest-level matches plus newly found matches at
// each coarser level: I_L + sum_{l<L} (I_l - I_{l+1}) / 2^(L-l).
inline double kernel_new_matches(const std::vector<double>& I) {
  const int L = static_cast<int>(I.size()) - 1;
  double k = I[L];
  for (int l = 0; l < L; ++l) k += (I[l] - I[l + 1]) / double(1u << (L - l));
  return k;
}

// Plain image-to-class score without any grid.
inline double nbnn(const SceneDescriptor& query, const SceneDescriptor& db, std::size_t vocab) {
  double total = 0.0;
  for (const auto& qf : query.features) {
    const auto qv = dense(qf, vocab);
    double best = 0.0;
    for (const auto& df : db.features) best = std::max(best, feature_sim(qv, dense(df, vocab)));
    total += best;
  }
  return total;
}

struct Scored {
  ImageId id;
  double score;
};

// Descending score, ascending id.
inline std::vector<Scored> rank(std::vector<Scored> s) {
  std::sort(s.begin(), s.end(), [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return s;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace xdloc::oracle

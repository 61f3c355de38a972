// Copyright 2026 The fpbits Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fpbits/bitstring.hpp"
#include "fpbits/error.hpp"
#include "fpbits/parallel.hpp"
#include "fpbits/rng.hpp"

namespace fpbits {

using Vector = std::vector<double>;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    ss += d * d;
  }
  return ss;
}

struct CodebookParams {
  std::size_t K = 200;
  std::size_t N_c = 300;
  double tau_s = -0.11;
  std::size_t top_t = 1;
};

/// Trained quantizer: K centroids plus the per-cluster boundary radii,
/// cardinalities, cardinality weights and the global mean distance vector
/// used by bit-training.
struct Codebook {
  std::vector<Vector> centroids;
  std::vector<double> radii;
  std::vector<std::size_t> cardinalities;
  std::vector<double> weights;
  std::vector<double> global_mean;
  CodebookParams params;

  std::size_t size() const { return centroids.size(); }
  std::size_t dim() const { return centroids.empty() ? 0 : centroids[0].size(); }
};

/// Per-image vector of minimum centroid distances.
struct DistanceVector {
  std::vector<double> values;
  std::string subject_id;
  std::string impression_id;
};

// ---------------------------------------------------------------------------
// K-means
// ---------------------------------------------------------------------------

struct KMeansResult {
  std::vector<Vector> centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> objective;  // sum of squared distances after each assignment step
  std::size_t iterations = 0;
  bool converged = false;
};

/// Nearest centroid by squared distance, smallest index on ties.
inline std::size_t nearest_centroid(std::span<const double> x, std::span<const Vector> centroids,
                                    double* best_sq = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < centroids.size(); ++d) {
    const double s = squared_distance(x, centroids[d]);
    if (s < best_d) {
      best_d = s;
      best = d;
    }
  }
  if (best_sq) *best_sq = best_d;
  return best;
}

namespace detail {

inline std::vector<Vector> kmeans_plus_plus(std::span<const Vector> pool, std::size_t k, Rng& rng) {
  std::vector<Vector> centers;
  centers.reserve(k);
  std::vector<bool> taken(pool.size(), false);
  std::size_t first = uniform_index(rng, pool.size());
  centers.push_back(pool[first]);
  taken[first] = true;
  std::vector<double> d2(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) d2[i] = squared_distance(pool[i], centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) total += taken[i] ? 0.0 : d2[i];
    std::size_t pick = pool.size();
    if (total > 0.0) {
      const double target = uniform(rng, 0.0, total);
      double acc = 0.0;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (taken[i] || d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Every remaining point duplicates a center; fall back to the first free one.
      for (std::size_t i = 0; i < pool.size() && pick == pool.size(); ++i) {
        if (!taken[i]) pick = i;
      }
    }
    taken[pick] = true;
    centers.push_back(pool[pick]);
    for (std::size_t i = 0; i < pool.size(); ++i) d2[i] = std::min(d2[i], squared_distance(pool[i], centers.back()));
  }
  return centers;
}

}  // namespace detail

/// Lloyd's algorithm from a seeded k-means++ start. Stops when an assignment
/// step changes nothing or after max_iters updates. A cluster left empty by
/// an update is reseeded at the point currently farthest from its centroid.
inline KMeansResult kmeans_train(std::span<const Vector> pool, std::size_t k, std::size_t max_iters,
                                 std::uint64_t seed) {
  if (k == 0 || pool.size() < k) {
    throw Error(ErrorCode::PoolTooSmall, "pool of " + std::to_string(pool.size()) + " cannot form " +
                                             std::to_string(k) + " clusters");
  }
  const std::size_t dim = pool[0].size();
  for (const auto& p : pool) require_same_length(p.size(), dim, "kmeans pool");

  Rng rng = make_rng(seed, {0x6b6d65616e73ULL});
  KMeansResult r;
  r.centroids = detail::kmeans_plus_plus(pool, k, rng);
  std::vector<std::size_t> assign(pool.size(), k);
  std::vector<double> sq(pool.size());

  for (std::size_t iter = 0;; ++iter) {
    std::vector<std::size_t> next(pool.size());
    parallel_for(pool.size(), [&](std::size_t i) { next[i] = nearest_centroid(pool[i], r.centroids, &sq[i]); });
    double objective = 0.0;
    for (double s : sq) objective += s;
    r.objective.push_back(objective);
    const bool unchanged = next == assign;
    assign = std::move(next);
    if (unchanged) {
      r.converged = true;
      break;
    }
    if (iter == max_iters) break;

    std::vector<Vector> sums(k, Vector(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      auto& s = sums[assign[i]];
      for (std::size_t j = 0; j < dim; ++j) s[j] += pool[i][j];
      ++counts[assign[i]];
    }
    std::vector<std::size_t> empty;
    for (std::size_t d = 0; d < k; ++d) {
      if (counts[d] == 0) {
        empty.push_back(d);
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) r.centroids[d][j] = sums[d][j] / static_cast<double>(counts[d]);
    }
    if (!empty.empty()) {
      std::vector<std::size_t> order(pool.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sq[a] > sq[b]; });
      for (std::size_t e = 0; e < empty.size(); ++e) r.centroids[empty[e]] = pool[order[e]];
    }
    ++r.iterations;
  }
  r.assignment = std::move(assign);
  return r;
}

// ---------------------------------------------------------------------------
// Boundary radii, cluster selection and bit conversion
// ---------------------------------------------------------------------------

/// Radius of cluster d: mean of the N_c smallest distances from c_d to pool
/// points assigned (by plain nearest centroid) to some other cluster.
inline std::vector<double> estimate_radii(std::span<const Vector> pool, std::span<const Vector> centroids,
                                          std::size_t n_c) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> assign(pool.size());
  parallel_for(pool.size(), [&](std::size_t i) { assign[i] = nearest_centroid(pool[i], centroids); });

  std::vector<double> radii(k, 0.0);
  std::vector<int> degenerate(k, 0);
  parallel_for(k, [&](std::size_t d) {
    std::vector<double> dist;
    dist.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (assign[i] != d) dist.push_back(std::sqrt(squared_distance(pool[i], centroids[d])));
    }
    if (dist.empty()) {
      degenerate[d] = 1;
      return;
    }
    const std::size_t m = std::min(n_c, dist.size());
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(m - 1), dist.end());
    std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(m));
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += dist[i];
    radii[d] = sum / static_cast<double>(m);
  });
  for (std::size_t d = 0; d < k; ++d) {
    if (degenerate[d]) throw Error(ErrorCode::DegeneratePool, "cluster " + std::to_string(d) + " has no external points");
  }
  return radii;
}

struct ClusterChoice {
  std::size_t index = 0;
  double adjusted = 0.0;  // ||f - c_d|| - M_d
};

/// Cluster minimizing distance-to-centroid minus boundary radius.
inline ClusterChoice nearest_cluster(std::span<const double> f, const Codebook& cb) {
  ClusterChoice best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t d = 0; d < cb.size(); ++d) {
    const double adj = std::sqrt(squared_distance(f, cb.centroids[d])) - cb.radii[d];
    if (adj < best.adjusted) best = {d, adj};
  }
  return best;
}

/// The top_t clusters by adjusted distance, ascending, smallest index on ties.
inline std::vector<ClusterChoice> top_clusters(std::span<const double> f, const Codebook& cb, std::size_t top_t) {
  std::vector<ClusterChoice> all(cb.size());
  for (std::size_t d = 0; d < cb.size(); ++d) {
    all[d] = {d, std::sqrt(squared_distance(f, cb.centroids[d])) - cb.radii[d]};
  }
  const std::size_t t = std::min(top_t, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(t), all.end(),
                    [](const ClusterChoice& a, const ClusterChoice& b) {
                      return a.adjusted < b.adjusted || (a.adjusted == b.adjusted && a.index < b.index);
                    });
  all.resize(t);
  return all;
}

/// Cluster sizes under the radius-adjusted assignment rule.
inline std::vector<std::size_t> cluster_cardinalities(std::span<const Vector> pool, const Codebook& cb) {
  std::vector<std::size_t> pick(pool.size());
  parallel_for(pool.size(), [&](std::size_t i) { pick[i] = nearest_cluster(pool[i], cb).index; });
  std::vector<std::size_t> h(cb.size(), 0);
  for (std::size_t p : pick) ++h[p];
  return h;
}

/// 1 - (H_d - min H) / (max H - min H): rare clusters weigh 1, the most
/// populated 0. All-equal cardinalities give weight 1 everywhere.
inline std::vector<double> cardinality_weights(std::span<const std::size_t> h) {
  std::vector<double> w(h.size(), 1.0);
  if (h.empty()) return w;
  const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  if (*hi == *lo) return w;
  const double span = static_cast<double>(*hi - *lo);
  for (std::size_t d = 0; d < h.size(); ++d) w[d] = 1.0 - static_cast<double>(h[d] - *lo) / span;
  return w;
}

/// Sets bit d for each fused vector's top_t clusters whose adjusted
/// distance is below tau_s.
inline BitString encode_bitstring(std::span<const Vector> fused, const Codebook& cb) {
  BitString bits(cb.size());
  for (const auto& f : fused) {
    for (const ClusterChoice& c : top_clusters(f, cb, cb.params.top_t)) {
      if (c.adjusted < cb.params.tau_s) bits.set(c.index);
    }
  }
  return bits;
}

inline DistanceVector distance_vector(std::span<const Vector> fused, const Codebook& cb) {
  if (fused.empty()) throw Error(ErrorCode::EmptyImage, "distance vector of an image without minutiae");
  DistanceVector out;
  out.values.assign(cb.size(), std::numeric_limits<double>::infinity());
  for (const auto& f : fused) {
    for (std::size_t d = 0; d < cb.size(); ++d) {
      out.values[d] = std::min(out.values[d], squared_distance(f, cb.centroids[d]));
    }
  }
  for (double& v : out.values) v = std::sqrt(v);
  return out;
}

/// Mean over fingers of each finger's mean distance vector.
inline std::vector<double> global_mean(std::span<const std::vector<DistanceVector>> per_finger) {
  if (per_finger.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no training fingers");
  std::vector<double> g;
  for (const auto& finger : per_finger) {
    if (finger.empty()) throw Error(ErrorCode::EmptyTrainingSet, "training finger without images");
    const std::size_t k = finger[0].values.size();
    if (g.empty()) g.assign(k, 0.0);
    require_same_length(k, g.size(), "global_mean");
    std::vector<double> mu(k, 0.0);
    for (const auto& dv : finger) {
      require_same_length(dv.values.size(), k, "global_mean");
      for (std::size_t d = 0; d < k; ++d) mu[d] += dv.values[d];
    }
    for (std::size_t d = 0; d < k; ++d) g[d] += mu[d] / static_cast<double>(finger.size());
  }
  for (double& v : g) v /= static_cast<double>(per_finger.size());
  return g;
}

}  // namespace fpbits

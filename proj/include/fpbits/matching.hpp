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
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fpbits/bit_training.hpp"
#include "fpbits/bitstring.hpp"
#include "fpbits/codebook.hpp"
#include "fpbits/error.hpp"

namespace fpbits {

enum class ScoreKind { Lgs, Intersection };

inline const char* to_string(ScoreKind k) { return k == ScoreKind::Lgs ? "lgs" : "intersection"; }

/// LGS scores are dissimilarities (>= 0); intersection scores are
/// similarities in [0, 1]. count is the number of averaged pairs or, for
/// bit-strings, the number of common ones.
struct MatchScore {
  double value = 0.0;
  ScoreKind kind = ScoreKind::Intersection;
  std::size_t count = 0;
  bool short_pairs = false;
};

struct LgsParams {
  std::size_t min_nl = 4;
  std::size_t max_nl = 10;
  double mu_p = 35.0;
  double tau_p = 0.4;
};

/// Number of best pairs averaged by LGS, growing sigmoidally with the
/// smaller minutia count.
inline std::size_t lgs_pair_budget(std::size_t n_a, std::size_t n_b, const LgsParams& p) {
  if (p.min_nl > p.max_nl) throw Error(ErrorCode::BadConfig, "min_nL exceeds max_nL");
  const double n = static_cast<double>(std::min(n_a, n_b));
  const double spread = static_cast<double>(p.max_nl - p.min_nl);
  const double extra = std::floor(spread / (1.0 + std::exp(-p.tau_p * (n - p.mu_p))));
  return p.min_nl + static_cast<std::size_t>(extra);
}

/// Mean of the n_L smallest distances among one-to-one pairs chosen
/// greedily in ascending distance order (ties: lower a index, then b index).
inline MatchScore lgs_score(std::span<const Vector> fa, std::span<const Vector> fb, const LgsParams& params) {
  if (fa.empty() || fb.empty()) throw Error(ErrorCode::EmptyImage, "LGS needs fused vectors on both sides");
  struct Pair {
    double dist;
    std::size_t a, b;
  };
  std::vector<Pair> pairs;
  pairs.reserve(fa.size() * fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    for (std::size_t j = 0; j < fb.size(); ++j) {
      require_same_length(fa[i].size(), fb[j].size(), "lgs_score");
      pairs.push_back({std::sqrt(squared_distance(fa[i], fb[j])), i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    return std::tie(x.dist, x.a, x.b) < std::tie(y.dist, y.a, y.b);
  });
  const std::size_t budget = lgs_pair_budget(fa.size(), fb.size(), params);
  std::vector<bool> used_a(fa.size(), false), used_b(fb.size(), false);
  double sum = 0.0;
  std::size_t taken = 0;
  for (const Pair& p : pairs) {
    if (taken == budget) break;
    if (used_a[p.a] || used_b[p.b]) continue;
    used_a[p.a] = used_b[p.b] = true;
    sum += p.dist;
    ++taken;
  }
  return {sum / static_cast<double>(taken), ScoreKind::Lgs, taken, taken < budget};
}

/// (n_A + n_B) |a AND b| / (n_A^2 + n_B^2); two empty strings score 0.
inline MatchScore intersection_score(const BitString& a, const BitString& b) {
  require_same_length(a.size(), b.size(), "intersection_score");
  const double na = static_cast<double>(a.ones());
  const double nb = static_cast<double>(b.ones());
  const std::size_t common = common_ones(a, b);
  if (na + nb == 0.0) return {0.0, ScoreKind::Intersection, 0, false};
  return {(na + nb) * static_cast<double>(common) / (na * na + nb * nb), ScoreKind::Intersection, common, false};
}

enum class MaskMode { Both, EnrolledOnly };

inline MatchScore masked_score(const BitString& query, const BitString& enrolled, const FingerModel& model,
                               MaskMode mode = MaskMode::Both) {
  require_same_length(query.size(), model.mask.size(), "masked_score query");
  require_same_length(enrolled.size(), model.mask.size(), "masked_score enrolled");
  const BitString e = enrolled & model.mask;
  if (mode == MaskMode::EnrolledOnly) return intersection_score(query, e);
  return intersection_score(query & model.mask, e);
}

/// OR-folds bit i onto position i mod length.
inline BitString fold_compress(const BitString& a, std::size_t length) {
  if (length == 0 || length > a.size()) {
    throw Error(ErrorCode::BadLength, "fold length " + std::to_string(length) + " outside 1.." + std::to_string(a.size()));
  }
  BitString out(length);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.test(i)) out.set(i % length);
  }
  return out;
}

}  // namespace fpbits

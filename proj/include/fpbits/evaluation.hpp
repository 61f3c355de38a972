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
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "fpbits/error.hpp"

namespace fpbits {

struct ImageRef {
  std::size_t subject = 0;
  std::size_t impression = 0;  // 0-based
  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct ImagePair {
  ImageRef a;
  ImageRef b;
};

struct PairSet {
  std::vector<ImagePair> genuine;
  std::vector<ImagePair> impostor;
};

/// FVC protocol: every unordered pair of impressions of the same subject is
/// genuine; every unordered pair of first impressions of different subjects
/// is impostor.
inline PairSet fvc_pairs(std::size_t n_subjects, std::size_t n_impressions) {
  PairSet out;
  out.genuine.reserve(n_subjects * n_impressions * (n_impressions - 1) / 2);
  out.impostor.reserve(n_subjects * (n_subjects - 1) / 2);
  for (std::size_t s = 0; s < n_subjects; ++s) {
    for (std::size_t i = 0; i < n_impressions; ++i) {
      for (std::size_t j = i + 1; j < n_impressions; ++j) out.genuine.push_back({{s, i}, {s, j}});
    }
  }
  for (std::size_t s = 0; s < n_subjects; ++s) {
    for (std::size_t t = s + 1; t < n_subjects; ++t) out.impostor.push_back({{s, 0}, {t, 0}});
  }
  return out;
}

enum class Polarity { Similarity, Dissimilarity };

struct RocPoint {
  double far = 0.0;
  double frr = 0.0;
  double threshold = 0.0;
};

/// roc is ordered by tightening threshold: FAR non-increasing, FRR
/// non-decreasing. For similarity scores a pair is accepted when
/// score >= threshold; for dissimilarities when score <= threshold.
struct ProtocolReport {
  std::vector<double> genuine_scores;
  std::vector<double> impostor_scores;
  double eer = 0.0;
  std::vector<RocPoint> roc;
  Polarity polarity = Polarity::Similarity;
};

/// Sweeps every distinct score as a threshold and reads the equal error
/// rate off the lower convex hull of the (FAR, FRR) operating points,
/// interpolating linearly between the two hull vertices that straddle
/// FAR = FRR.
inline ProtocolReport compute_eer(std::span<const double> genuine, std::span<const double> impostor,
                                  Polarity polarity) {
  if (genuine.empty() || impostor.empty()) throw Error(ErrorCode::EmptyScores, "need genuine and impostor scores");
  const double sign = polarity == Polarity::Similarity ? 1.0 : -1.0;
  std::vector<double> g, im;
  for (double s : genuine) g.push_back(sign * s);
  for (double s : impostor) im.push_back(sign * s);
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());

  std::vector<double> thresholds(g);
  thresholds.insert(thresholds.end(), im.begin(), im.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  ProtocolReport rep;
  rep.polarity = polarity;
  rep.genuine_scores.assign(genuine.begin(), genuine.end());
  rep.impostor_scores.assign(impostor.begin(), impostor.end());
  const double ng = static_cast<double>(g.size());
  const double ni = static_cast<double>(im.size());
  for (double t : thresholds) {
    const auto rejected = std::lower_bound(g.begin(), g.end(), t) - g.begin();
    const auto accepted = im.end() - std::lower_bound(im.begin(), im.end(), t);
    rep.roc.push_back({static_cast<double>(accepted) / ni, static_cast<double>(rejected) / ng, sign * t});
  }

  // Lower hull over points ordered by increasing FAR (reverse of roc order).
  struct P {
    double x, y;
  };
  std::vector<P> hull;
  for (auto it = rep.roc.rbegin(); it != rep.roc.rend(); ++it) {
    const P p{it->far, it->frr};
    while (hull.size() >= 2) {
      const P& o = hull[hull.size() - 2];
      const P& a = hull.back();
      const double cross = (a.x - o.x) * (p.y - o.y) - (a.y - o.y) * (p.x - o.x);
      if (cross <= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  rep.eer = hull.front().y;  // fallback; overwritten below
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const double diff = hull[i].y - hull[i].x;
    if (diff > 0.0) continue;
    if (i == 0 || diff == 0.0) {
      rep.eer = hull[i].x;
    } else {
      const P& p = hull[i - 1];
      const P& q = hull[i];
      const double dp = p.y - p.x;
      const double s = dp / (dp - diff);
      rep.eer = p.x + s * (q.x - p.x);
    }
    break;
  }
  return rep;
}

}  // namespace fpbits

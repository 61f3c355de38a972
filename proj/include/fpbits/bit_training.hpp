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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fpbits/bitstring.hpp"
#include "fpbits/codebook.hpp"
#include "fpbits/error.hpp"

namespace fpbits {

struct BitTrainingParams {
  double alpha = 0.45;
  double beta = 0.4;
};

/// Finger-specific bit selection: which of the K positions take part in
/// matching for this finger.
struct FingerModel {
  std::string finger_id;
  std::vector<double> power;
  std::vector<double> reliability;
  BitString mask;
  double n_mean = 0.0;
  BitTrainingParams params;
};

/// Mean squared below-global-mean deviation per bit over the finger's images.
inline std::vector<double> interclass_variance(std::span<const DistanceVector> dv, std::span<const double> global) {
  std::vector<double> var(global.size(), 0.0);
  if (dv.empty()) return var;
  for (const auto& v : dv) {
    require_same_length(v.values.size(), global.size(), "interclass_variance");
    for (std::size_t d = 0; d < global.size(); ++d) {
      const double x = v.values[d] - global[d];
      if (x < 0.0) var[d] += x * x;
    }
  }
  for (double& s : var) s /= static_cast<double>(dv.size());
  return var;
}

inline std::vector<double> discrimination_power(std::span<const double> variance, std::span<const double> weights) {
  require_same_length(variance.size(), weights.size(), "discrimination_power");
  std::vector<double> p(variance.size());
  for (std::size_t d = 0; d < p.size(); ++d) p[d] = weights[d] * variance[d];
  return p;
}

/// Fraction of enrollment bit-strings with each bit set.
inline std::vector<double> reliability(std::span<const BitString> bitstrings) {
  if (bitstrings.empty()) throw Error(ErrorCode::EmptyEnrollment, "reliability needs at least one bit-string");
  const std::size_t k = bitstrings[0].size();
  std::vector<double> l(k, 0.0);
  for (const auto& b : bitstrings) {
    require_same_length(b.size(), k, "reliability");
    for (std::size_t d = 0; d < k; ++d) {
      if (b.test(d)) l[d] += 1.0;
    }
  }
  for (double& v : l) v /= static_cast<double>(bitstrings.size());
  return l;
}

/// Sigmoid acceptance bar for the rank-t bit (t is 1-based): rises from
/// alpha towards 1, crossing the midpoint at t = n_mean.
inline double adaptive_threshold(double t, double alpha, double beta, double n_mean) {
  return alpha + (1.0 - alpha) / (1.0 + std::exp(-beta * (t - n_mean)));
}

/// 1 - adaptive_threshold, computed directly. The threshold itself rounds to
/// exactly 1.0 once t is a few dozen ranks past n_mean; the headroom keeps
/// its resolution until exp overflows.
inline double threshold_headroom(double t, double alpha, double beta, double n_mean) {
  return (1.0 - alpha) / (1.0 + std::exp(beta * (t - n_mean)));
}

/// Visits bits by descending power (ties: lower index first) and keeps the
/// rank-t bit when its reliability exceeds the rank-t threshold.
inline BitString train_mask(std::span<const double> power, std::span<const double> rel, double alpha, double beta,
                            double n_mean) {
  require_same_length(power.size(), rel.size(), "train_mask");
  std::vector<std::size_t> order(power.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return power[a] > power[b]; });
  BitString mask(power.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    // rel > tau, compared as 1 - rel < 1 - tau.
    const double headroom = threshold_headroom(static_cast<double>(rank + 1), alpha, beta, n_mean);
    if (1.0 - rel[order[rank]] < headroom) mask.set(order[rank]);
  }
  return mask;
}

/// Full per-finger training from its enrollment samples.
/// distance_vectors[j], bitstrings[j] and minutia_counts[j] describe sample j.
inline FingerModel train_finger(std::string finger_id, std::span<const DistanceVector> distance_vectors,
                                std::span<const BitString> bitstrings, std::span<const std::size_t> minutia_counts,
                                const Codebook& cb, const BitTrainingParams& params) {
  if (bitstrings.empty()) throw Error(ErrorCode::EmptyEnrollment, "finger " + finger_id + " has no samples");
  require_same_length(distance_vectors.size(), bitstrings.size(), "train_finger samples");
  require_same_length(minutia_counts.size(), bitstrings.size(), "train_finger samples");
  FingerModel m;
  m.finger_id = std::move(finger_id);
  m.params = params;
  m.power = discrimination_power(interclass_variance(distance_vectors, cb.global_mean), cb.weights);
  m.reliability = reliability(bitstrings);
  double total = 0.0;
  for (std::size_t c : minutia_counts) total += static_cast<double>(c);
  m.n_mean = total / static_cast<double>(minutia_counts.size());
  m.mask = train_mask(m.power, m.reliability, params.alpha, params.beta, m.n_mean);
  return m;
}

}  // namespace fpbits

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
#include <charconv>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fpbits/bit_training.hpp"
#include "fpbits/codebook.hpp"
#include "fpbits/config.hpp"
#include "fpbits/evaluation.hpp"
#include "fpbits/local_structures.hpp"
#include "fpbits/matching.hpp"
#include "fpbits/model.hpp"
#include "fpbits/parallel.hpp"
#include "fpbits/rng.hpp"
#include "fpbits/subspace_fusion.hpp"
#include "fpbits/synth.hpp"

namespace fpbits {

struct LocalStructures {
  std::vector<MblsVector> mbls;
  std::vector<TblsVector> tbls;
};

/// MBLS and TBLS for every minutia of the sample. The image is normalized
/// to zero mean and unit deviation; samples outside it read as 0.
inline LocalStructures compute_local_structures(const Sample& sample, const StructureGeometry& geom,
                                                const SpreadModel& spread) {
  const auto& minutiae = sample.minutiae.minutiae;
  LocalStructures out;
  out.mbls.reserve(minutiae.size());
  out.tbls.reserve(minutiae.size());
  if (minutiae.empty()) return out;
  const RealImage img = normalize_image(sample.image, 0.0, 1.0);
  for (std::size_t i = 0; i < minutiae.size(); ++i) {
    out.mbls.push_back(build_mbls(minutiae, i, geom, spread));
    out.tbls.push_back(extract_tbls(minutiae[i], img, geom, 0.0));
  }
  return out;
}

/// Projected (not yet normalized) subspace coordinates of one minutia.
struct Projection {
  std::vector<double> f_min;
  std::vector<double> f_text;
};

inline Vector fuse_projection(const Projection& p, const PipelineConfig& cfg,
                              const std::optional<ComponentStats>& stats_m,
                              const std::optional<ComponentStats>& stats_t) {
  if (cfg.fusion_norm == FusionNorm::Corpus) {
    return concat_weighted(stats_m->apply(p.f_min), stats_t->apply(p.f_text), cfg.omega_M, cfg.omega_T).values;
  }
  return fuse(p.f_min, p.f_text, cfg.omega_M, cfg.omega_T).values;
}

/// One image reduced to its fused per-minutia descriptors.
struct ImageFeatures {
  std::string subject_id;
  std::string impression_id;
  std::size_t minutia_count = 0;
  std::vector<Vector> fused;
};

inline ImageFeatures extract_features(const Model& model, const Sample& sample) {
  const LocalStructures ls = compute_local_structures(sample, model.geometry, model.config.spread());
  ImageFeatures f{sample.minutiae.subject_id, sample.minutiae.impression_id, sample.minutiae.minutiae.size(), {}};
  f.fused.reserve(ls.mbls.size());
  for (std::size_t i = 0; i < ls.mbls.size(); ++i) {
    const Projection p{project(model.pca_m, ls.mbls[i].values), project(model.pca_t, ls.tbls[i].values)};
    f.fused.push_back(fuse_projection(p, model.config, model.stats_m, model.stats_t));
  }
  return f;
}

inline std::vector<ImageFeatures> extract_all(const Model& model, std::span<const Sample> samples) {
  std::vector<ImageFeatures> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { out[i] = extract_features(model, samples[i]); });
  return out;
}

inline BitString encode_features(const Model& model, const ImageFeatures& f) {
  return encode_bitstring(f.fused, model.codebook);
}

// ---------------------------------------------------------------------------
// Dataset grouping
// ---------------------------------------------------------------------------

/// Sample indices per subject (subjects sorted by id, impressions ordered
/// numerically when the id is a number, lexicographically otherwise).
struct SubjectGroups {
  std::vector<std::string> subjects;
  std::vector<std::vector<std::size_t>> images;

  std::size_t min_impressions() const {
    std::size_t m = images.empty() ? 0 : images[0].size();
    for (const auto& g : images) m = std::min(m, g.size());
    return m;
  }
};

namespace detail {

inline bool impression_less(const std::string& a, const std::string& b) {
  long x = 0, y = 0;
  const auto ra = std::from_chars(a.data(), a.data() + a.size(), x);
  const auto rb = std::from_chars(b.data(), b.data() + b.size(), y);
  const bool na = ra.ec == std::errc() && ra.ptr == a.data() + a.size();
  const bool nb = rb.ec == std::errc() && rb.ptr == b.data() + b.size();
  if (na && nb) return x < y;
  if (na != nb) return na;
  return a < b;
}

}  // namespace detail

template <typename Item, typename SubjectOf, typename ImpressionOf>
SubjectGroups group_by_subject(std::span<const Item> items, SubjectOf subject_of, ImpressionOf impression_of) {
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < items.size(); ++i) by_subject[subject_of(items[i])].push_back(i);
  SubjectGroups g;
  for (auto& [subject, idx] : by_subject) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return detail::impression_less(impression_of(items[a]), impression_of(items[b]));
    });
    g.subjects.push_back(subject);
    g.images.push_back(std::move(idx));
  }
  return g;
}

inline SubjectGroups group_samples(std::span<const Sample> samples) {
  return group_by_subject(samples, [](const Sample& s) { return s.minutiae.subject_id; },
                          [](const Sample& s) { return s.minutiae.impression_id; });
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainingSummary {
  std::size_t images = 0;
  std::size_t minutiae = 0;
  std::size_t pca_samples = 0;
  std::size_t augmented = 0;
  std::size_t kmeans_iterations = 0;
  bool kmeans_converged = false;
  std::vector<double> kmeans_objective;
};

namespace detail {

// Evenly spaced subset of [0, n) of size min(n, m).
inline std::vector<std::size_t> even_subset(std::size_t n, std::size_t m) {
  std::vector<std::size_t> out;
  if (m == 0 || n == 0) return out;
  if (n <= m) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  out.reserve(m);
  for (std::size_t j = 0; j < m; ++j) out.push_back(j * n / m);
  return out;
}

}  // namespace detail

/// Learns both subspaces, the codebook (centroids, radii, cardinality
/// weights) and the global mean distance vector from a training set.
inline Model train_model(std::span<const Sample> training, const PipelineConfig& config,
                         TrainingSummary* summary = nullptr) {
  config.validate();
  Model model;
  model.config = config;
  model.geometry = config.geometry();
  const SpreadModel spread = config.spread();

  std::vector<std::size_t> offsets(training.size() + 1, 0);
  for (std::size_t i = 0; i < training.size(); ++i) {
    offsets[i + 1] = offsets[i] + training[i].minutiae.minutiae.size();
  }
  const std::size_t total = offsets.back();
  if (total < 2) throw Error(ErrorCode::EmptyTrainingSet, "training set has fewer than 2 minutiae");

  // Pass 1: subspaces from an evenly spaced subset of all minutiae.
  const auto chosen = detail::even_subset(total, config.pca_max_samples);
  std::vector<std::vector<double>> mbls_rows(chosen.size()), tbls_rows(chosen.size());
  parallel_for(training.size(), [&](std::size_t img) {
    auto lo = std::lower_bound(chosen.begin(), chosen.end(), offsets[img]);
    auto hi = std::lower_bound(chosen.begin(), chosen.end(), offsets[img + 1]);
    if (lo == hi) return;
    const LocalStructures ls = compute_local_structures(training[img], model.geometry, spread);
    for (auto it = lo; it != hi; ++it) {
      const std::size_t row = static_cast<std::size_t>(it - chosen.begin());
      mbls_rows[row] = ls.mbls[*it - offsets[img]].values;
      tbls_rows[row] = ls.tbls[*it - offsets[img]].values;
    }
  });
  model.pca_m = train_pca(mbls_rows, config.n_p);
  model.pca_t = train_pca(tbls_rows, config.n_p);
  mbls_rows.clear();
  tbls_rows.clear();

  // Pass 2: project every training minutia.
  std::vector<Projection> proj(total);
  parallel_for(training.size(), [&](std::size_t img) {
    const LocalStructures ls = compute_local_structures(training[img], model.geometry, spread);
    for (std::size_t k = 0; k < ls.mbls.size(); ++k) {
      proj[offsets[img] + k] = {project(model.pca_m, ls.mbls[k].values), project(model.pca_t, ls.tbls[k].values)};
    }
  });
  if (config.fusion_norm == FusionNorm::Corpus) {
    std::vector<std::vector<double>> a, b;
    a.reserve(total);
    b.reserve(total);
    for (const auto& p : proj) {
      a.push_back(p.f_min);
      b.push_back(p.f_text);
    }
    model.stats_m = ComponentStats::fit(a);
    model.stats_t = ComponentStats::fit(b);
  }
  std::vector<Vector> pool(total);
  for (std::size_t i = 0; i < total; ++i) pool[i] = fuse_projection(proj[i], config, model.stats_m, model.stats_t);

  // Optional augmentation: random minutia neighborhoods paired with the
  // texture of an existing training minutia.
  if (config.augment > 0) {
    const Sample& ref_img = training.front();
    const std::size_t per = std::max<std::size_t>(2, total / training.size());
    std::vector<Vector> extra(config.augment);
    parallel_for(config.augment, [&](std::size_t a) {
      Rng rng = make_rng(config.seed, {0xa06e, a});
      std::vector<Minutia> fake(per);
      for (auto& m : fake) {
        m.x = uniform(rng, 0.0, std::max(1, ref_img.minutiae.width));
        m.y = uniform(rng, 0.0, std::max(1, ref_img.minutiae.height));
        m.theta = uniform(rng, 0.0, kTwoPi);
      }
      const MblsVector mb = build_mbls(fake, 0, model.geometry, spread);
      const Projection p{project(model.pca_m, mb.values), proj[a % total].f_text};
      extra[a] = fuse_projection(p, config, model.stats_m, model.stats_t);
    });
    pool.insert(pool.end(), extra.begin(), extra.end());
  }

  const KMeansResult km = kmeans_train(pool, config.K, config.kmeans_max_iters, config.seed);
  Codebook& cb = model.codebook;
  cb.params = config.codebook_params();
  cb.centroids = km.centroids;
  cb.radii = estimate_radii(pool, cb.centroids, config.N_c);
  cb.cardinalities = cluster_cardinalities(pool, cb);
  cb.weights = cardinality_weights(cb.cardinalities);

  // Global mean distance vector over training fingers.
  const SubjectGroups groups = group_samples(training);
  std::vector<std::vector<DistanceVector>> per_finger;
  for (const auto& idx : groups.images) {
    std::vector<DistanceVector> dvs;
    for (std::size_t img : idx) {
      if (offsets[img + 1] == offsets[img]) continue;
      std::vector<Vector> f(pool.begin() + static_cast<std::ptrdiff_t>(offsets[img]),
                            pool.begin() + static_cast<std::ptrdiff_t>(offsets[img + 1]));
      dvs.push_back(distance_vector(f, cb));
    }
    if (!dvs.empty()) per_finger.push_back(std::move(dvs));
  }
  cb.global_mean = global_mean(per_finger);

  if (summary) {
    summary->images = training.size();
    summary->minutiae = total;
    summary->pca_samples = chosen.size();
    summary->augmented = config.augment;
    summary->kmeans_iterations = km.iterations;
    summary->kmeans_converged = km.converged;
    summary->kmeans_objective = km.objective;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Protocol evaluation
// ---------------------------------------------------------------------------

struct ScoreRow {
  std::string subject_a, impression_a, subject_b, impression_b;
  ScoreKind kind = ScoreKind::Intersection;
  double score = 0.0;
  bool genuine = false;
};

struct Evaluation {
  std::vector<ScoreRow> rows;
  ProtocolReport report;
  std::size_t genuine_pairs = 0;
  std::size_t impostor_pairs = 0;
};

namespace detail {

inline Evaluation finish(std::vector<ScoreRow> rows, Polarity polarity) {
  Evaluation ev;
  std::vector<double> g, im;
  for (const auto& r : rows) (r.genuine ? g : im).push_back(r.score);
  ev.genuine_pairs = g.size();
  ev.impostor_pairs = im.size();
  ev.report = compute_eer(g, im, polarity);
  ev.rows = std::move(rows);
  return ev;
}

inline std::size_t protocol_impressions(const SubjectGroups& groups) {
  const std::size_t m = groups.min_impressions();
  if (groups.subjects.size() < 2 || m < 2) {
    throw Error(ErrorCode::EmptyScores, "FVC protocol needs >= 2 subjects with >= 2 impressions");
  }
  return m;
}

}  // namespace detail

/// Scores every FVC pair with score(i, j) over sample indices; images
/// beyond the smallest per-subject impression count are ignored.
template <typename ScoreFn>
Evaluation evaluate_fvc(const SubjectGroups& groups, std::span<const ImageFeatures> meta, ScoreKind kind,
                        Polarity polarity, ScoreFn score) {
  const std::size_t m = detail::protocol_impressions(groups);
  const PairSet pairs = fvc_pairs(groups.subjects.size(), m);
  std::vector<ScoreRow> rows(pairs.genuine.size() + pairs.impostor.size());
  auto fill = [&](std::size_t r, const ImagePair& p, bool genuine) {
    const std::size_t a = groups.images[p.a.subject][p.a.impression];
    const std::size_t b = groups.images[p.b.subject][p.b.impression];
    rows[r] = {meta[a].subject_id, meta[a].impression_id, meta[b].subject_id, meta[b].impression_id, kind,
               score(a, b), genuine};
  };
  parallel_for(rows.size(), [&](std::size_t r) {
    if (r < pairs.genuine.size()) {
      fill(r, pairs.genuine[r], true);
    } else {
      fill(r, pairs.impostor[r - pairs.genuine.size()], false);
    }
  });
  return detail::finish(std::move(rows), polarity);
}

inline Evaluation evaluate_lgs(std::span<const ImageFeatures> features, const LgsParams& lgs) {
  const SubjectGroups groups = group_by_subject(features, [](const ImageFeatures& f) { return f.subject_id; },
                                                [](const ImageFeatures& f) { return f.impression_id; });
  return evaluate_fvc(groups, features, ScoreKind::Lgs, Polarity::Dissimilarity,
                      [&](std::size_t a, std::size_t b) { return lgs_score(features[a].fused, features[b].fused, lgs).value; });
}

inline Evaluation evaluate_bits(std::span<const ImageFeatures> features, std::span<const BitString> bits) {
  const SubjectGroups groups = group_by_subject(features, [](const ImageFeatures& f) { return f.subject_id; },
                                                [](const ImageFeatures& f) { return f.impression_id; });
  return evaluate_fvc(groups, features, ScoreKind::Intersection, Polarity::Similarity,
                      [&](std::size_t a, std::size_t b) { return intersection_score(bits[a], bits[b]).value; });
}

/// Builds a finger model from the given enrollment samples.
inline EnrolledFinger enroll_finger(const Model& model, const std::string& finger_id,
                                    std::span<const ImageFeatures> samples, std::span<const BitString> bits) {
  require_same_length(samples.size(), bits.size(), "enrollment samples");
  std::vector<DistanceVector> dvs;
  std::vector<std::size_t> counts;
  EnrolledFinger f;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (samples[j].fused.empty()) continue;
    dvs.push_back(distance_vector(samples[j].fused, model.codebook));
    counts.push_back(samples[j].minutia_count);
    f.enrolled.push_back(bits[j]);
    f.impressions.push_back(samples[j].impression_id);
  }
  f.model = train_finger(finger_id, dvs, f.enrolled, counts, model.codebook, model.config.bit_training());
  return f;
}

/// Intersection score of a query against one enrollment string, optionally under
/// the finger's mask.
inline double enrolled_score(const BitString& query, const EnrolledFinger& finger, std::size_t j, bool use_mask,
                             MaskMode mode) {
  return use_mask ? masked_score(query, finger.enrolled[j], finger.model, mode).value
                  : intersection_score(query, finger.enrolled[j]).value;
}

struct BitTrainingEvaluation {
  std::vector<EnrolledFinger> fingers;
  Evaluation trained;
  Evaluation untrained;  // same pairs, no mask
};

/// Enrolls each subject on its first enroll_count impressions and tests on
/// the rest. Every test impression is compared with every enrollment string
/// of a finger: genuine when it is the finger's own impression, impostor for
/// the first test impression of every other subject. Both evaluations use
/// the same comparisons and differ only in the mask.
inline BitTrainingEvaluation evaluate_bit_training(const Model& model, std::span<const ImageFeatures> features,
                                                   std::span<const BitString> bits) {
  const SubjectGroups groups = group_by_subject(features, [](const ImageFeatures& f) { return f.subject_id; },
                                                [](const ImageFeatures& f) { return f.impression_id; });
  const std::size_t n_enroll = model.config.enroll_count;
  if (groups.subjects.size() < 2 || groups.min_impressions() <= n_enroll) {
    throw Error(ErrorCode::EmptyScores, "bit-training protocol needs >= 2 subjects with more than " +
                                            std::to_string(n_enroll) + " impressions");
  }
  BitTrainingEvaluation out;
  out.fingers.resize(groups.subjects.size());
  parallel_for(groups.subjects.size(), [&](std::size_t s) {
    std::vector<ImageFeatures> fs;
    std::vector<BitString> bs;
    for (std::size_t j = 0; j < n_enroll; ++j) {
      fs.push_back(features[groups.images[s][j]]);
      bs.push_back(bits[groups.images[s][j]]);
    }
    out.fingers[s] = enroll_finger(model, groups.subjects[s], fs, bs);
  });

  struct Probe {
    std::size_t finger, enrolled, image;
    bool genuine;
  };
  std::vector<Probe> probes;
  for (std::size_t s = 0; s < groups.subjects.size(); ++s) {
    for (std::size_t e = 0; e < out.fingers[s].enrolled.size(); ++e) {
      for (std::size_t j = n_enroll; j < groups.images[s].size(); ++j) probes.push_back({s, e, groups.images[s][j], true});
      for (std::size_t t = 0; t < groups.subjects.size(); ++t) {
        if (t != s) probes.push_back({s, e, groups.images[t][n_enroll], false});
      }
    }
  }
  auto run = [&](bool use_mask) {
    std::vector<ScoreRow> rows(probes.size());
    parallel_for(probes.size(), [&](std::size_t r) {
      const Probe& p = probes[r];
      const auto& q = features[p.image];
      const EnrolledFinger& f = out.fingers[p.finger];
      rows[r] = {groups.subjects[p.finger], f.impressions[p.enrolled], q.subject_id, q.impression_id,
                 ScoreKind::Intersection, enrolled_score(bits[p.image], f, p.enrolled, use_mask, model.config.mask_mode),
                 p.genuine};
    });
    return detail::finish(std::move(rows), Polarity::Similarity);
  };
  out.trained = run(true);
  out.untrained = run(false);
  return out;
}

/// EER of the bit-string matcher after OR-folding every string to length.
inline Evaluation evaluate_folded(std::span<const ImageFeatures> features, std::span<const BitString> bits,
                                  std::size_t length) {
  std::vector<BitString> folded(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) folded[i] = fold_compress(bits[i], length);
  return evaluate_bits(features, folded);
}

}  // namespace fpbits

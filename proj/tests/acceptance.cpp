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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "fpbits/fpbits.hpp"

using namespace fpbits;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<Vector> random_pool(Rng& rng, std::size_t n, std::size_t dim, double spread = 1.0) {
  std::vector<Vector> out(n, Vector(dim));
  for (auto& v : out) {
    for (double& x : v) x = gaussian(rng, 0.0, spread);
  }
  return out;
}

// Shared end-to-end run on the synthetic split used by the separation and
// compression criteria.
struct EndToEnd {
  Model model;
  std::vector<ImageFeatures> features;
  std::vector<BitString> bits;
  Evaluation plain;
  BitTrainingEvaluation training;
  double seconds = 0.0;
};

const EndToEnd& end_to_end() {
  static const EndToEnd run = [] {
    const auto t0 = Clock::now();
    EndToEnd r;
    PipelineConfig cfg;
    cfg.n_p = 20;
    cfg.K = 200;
    SynthParams train_params;
    train_params.n_subjects = 20;
    train_params.n_impressions = 4;
    train_params.seed = 1001;
    SynthParams test_params;
    test_params.n_subjects = 30;
    test_params.n_impressions = 8;
    test_params.seed = 2002;
    r.model = train_model(synth_dataset(train_params), cfg);
    r.features = extract_all(r.model, synth_dataset(test_params));
    for (const auto& f : r.features) r.bits.push_back(encode_features(r.model, f));
    r.plain = evaluate_bits(r.features, r.bits);
    r.training = evaluate_bit_training(r.model, r.features, r.bits);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome mbls_normalization() {
  const auto t0 = Clock::now();
  const auto geom = StructureGeometry::make(80, 40, 10);
  Rng rng = make_rng(101, {});
  std::size_t nonzero = 0;
  double worst = 0.0;
  while (nonzero < 1000) {
    std::vector<Minutia> all;
    const std::size_t n = 2 + uniform_index(rng, 40);
    for (std::size_t i = 0; i < n; ++i) all.push_back({uniform(rng, 0, 300), uniform(rng, 0, 300), uniform(rng, 0, kTwoPi)});
    for (std::size_t i = 0; i < n && nonzero < 1000; ++i) {
      const auto p = build_mbls(all, i, geom, SpreadModel{});
      const double norm = l2(p.values);
      if (norm == 0.0) continue;
      ++nonzero;
      worst = std::max(worst, std::abs(norm - 1.0));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 10.0, fmt("%zu structures, max |norm-1| = %.2e, %.2f s", nonzero, worst, secs)};
}

Outcome fig5_scenarios() {
  const auto geom = StructureGeometry::make(80, 40, 10);
  const SpreadModel spread{};
  // Reference at the origin; k neighbors sit at identical positions in both
  // structures and one more neighbor is mirrored across the u-axis.
  auto scenario = [](int k) {
    std::vector<Minutia> a{{200, 200, 0.0}}, b{{200, 200, 0.0}};
    for (int i = 0; i < k; ++i) {
      a.push_back({140.0 + 25.0 * i, 200, 0});
      b.push_back({140.0 + 25.0 * i, 200, 0});
    }
    a.push_back({230, 230, 0});
    b.push_back({230, 170, 0});
    return std::pair{a, b};
  };
  auto raw = [&](const std::vector<Minutia>& m) { return mbls_mixture(mbls_neighbors(m, 0, geom.r_m), geom, spread); };
  const auto [a1, b1] = scenario(1);
  const auto [a3, b3] = scenario(3);
  const double u1 = dist(raw(a1), raw(b1));
  const double u3 = dist(raw(a3), raw(b3));
  const double n1 = mbls_distance(build_mbls(a1, 0, geom, spread), build_mbls(b1, 0, geom, spread));
  const double n3 = mbls_distance(build_mbls(a3, 0, geom, spread), build_mbls(b3, 0, geom, spread));
  return {std::abs(u1 - u3) <= 1e-9 && n3 < n1,
          fmt("unnormalized %.9f vs %.9f, normalized 1-match %.6f > 3-match %.6f", u1, u3, n1, n3)};
}

Outcome pca_distances() {
  Rng rng = make_rng(103, {});
  const auto samples = random_pool(rng, 50, 30);
  const PcaModel full = train_pca(samples, 30);
  const PcaModel cut = train_pca(samples, 10);
  std::vector<Vector> pf, pc;
  for (const auto& s : samples) {
    pf.push_back(project(full, s));
    pc.push_back(project(cut, s));
  }
  double worst_rel = 0.0;
  bool never_increases = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double d = dist(samples[i], samples[j]);
      worst_rel = std::max(worst_rel, std::abs(dist(pf[i], pf[j]) - d) / d);
      if (dist(pc[i], pc[j]) > d * (1.0 + 1e-12)) never_increases = false;
    }
  }
  return {worst_rel <= 1e-6 && never_increases,
          fmt("full-rank max relative error %.2e, truncated never larger: %s", worst_rel, never_increases ? "yes" : "no")};
}

Outcome rigid_invariance() {
  const auto geom = StructureGeometry::make(80, 40, 10);
  Rng rng = make_rng(104, {});
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Minutia> all, moved;
    for (int i = 0; i < 30; ++i) all.push_back({uniform(rng, 0, 300), uniform(rng, 0, 300), uniform(rng, 0, kTwoPi)});
    RigidTransform t;
    t.angle = uniform(rng, 0, kTwoPi);
    t.tx = uniform(rng, -80, 80);
    t.ty = uniform(rng, -80, 80);
    for (const auto& m : all) moved.push_back(t.apply(m));
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto p = build_mbls(all, i, geom, SpreadModel{});
      const auto q = build_mbls(moved, i, geom, SpreadModel{});
      for (std::size_t k = 0; k < p.values.size(); ++k) worst = std::max(worst, std::abs(p.values[k] - q.values[k]));
    }
  }

  // Noise-free renders of one synthetic finger, before and after a rigid
  // motion about the image center. Only minutiae that stay a full texture
  // radius inside the frame in both views are kept.
  const EndToEnd& e2e = end_to_end();
  SynthParams sp;
  sp.seed = 2002;
  double min_jaccard = 1.0;
  for (std::size_t subject = 0; subject < 5; ++subject) {
    const SubjectMaster master = make_master(sp, subject);
    RigidTransform t;
    t.cx = 0.5 * (sp.width - 1);
    t.cy = 0.5 * (sp.height - 1);
    t.angle = uniform(rng, 0, kTwoPi);
    t.tx = uniform(rng, -10, 10);
    t.ty = uniform(rng, -10, 10);
    Sample a, b;
    for (const auto& m : master.minutiae) {
      if (std::hypot(m.x - t.cx, m.y - t.cy) > 100.0) continue;
      a.minutiae.minutiae.push_back(m);
      b.minutiae.minutiae.push_back(t.apply(m));
    }
    Rng unused = make_rng(0, {});
    a.image = render_ridges(master.field, sp.width, sp.height, RigidTransform{0, 0, 0, t.cx, t.cy}, 0.0, unused);
    b.image = render_ridges(master.field, sp.width, sp.height, t, 0.0, unused);
    const BitString ba = encode_features(e2e.model, extract_features(e2e.model, a));
    const BitString bb = encode_features(e2e.model, extract_features(e2e.model, b));
    const std::size_t inter = common_ones(ba, bb);
    const std::size_t uni = ba.ones() + bb.ones() - inter;
    min_jaccard = std::min(min_jaccard, uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni));
  }
  return {worst <= 1e-6 && min_jaccard >= 0.9,
          fmt("max MBLS deviation %.2e, min bit-string Jaccard %.3f over 5 fingers", worst, min_jaccard)};
}

Outcome kmeans_behaviour() {
  bool monotone = true, oracle = true;
  std::size_t iterations = 0;
  for (std::uint64_t pool_id = 0; pool_id < 5; ++pool_id) {
    Rng rng = make_rng(105, {pool_id});
    std::vector<Vector> pool;
    for (int blob = 0; blob < 6; ++blob) {
      Vector center(8);
      for (double& c : center) c = uniform(rng, -10, 10);
      for (int i = 0; i < 60; ++i) {
        Vector v = center;
        for (double& x : v) x += gaussian(rng, 0.0, 1.5);
        pool.push_back(v);
      }
    }
    const KMeansResult r = kmeans_train(pool, 10, 100, 7 + pool_id);
    iterations += r.objective.size();
    for (std::size_t i = 1; i < r.objective.size(); ++i) {
      if (r.objective[i] > r.objective[i - 1] * (1.0 + 1e-12)) monotone = false;
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      std::size_t best = 0;
      double best_d = dist(pool[i], r.centroids[0]);
      for (std::size_t d = 1; d < r.centroids.size(); ++d) {
        const double dd = dist(pool[i], r.centroids[d]);
        if (dd < best_d) {
          best_d = dd;
          best = d;
        }
      }
      if (best != r.assignment[i]) oracle = false;
    }
  }
  return {monotone && oracle, fmt("5 pools, %zu objective values, monotone: %s, assignment = oracle: %s", iterations,
                                  monotone ? "yes" : "no", oracle ? "yes" : "no")};
}

Outcome encode_oracle() {
  Rng rng = make_rng(106, {});
  Codebook cb;
  const auto pool = random_pool(rng, 600, 12);
  cb.centroids = random_pool(rng, 50, 12);
  cb.radii = estimate_radii(pool, cb.centroids, 20);
  const auto fused = random_pool(rng, 100, 12);
  std::size_t mismatches = 0, set_bits = 0;
  for (std::size_t top : {std::size_t{1}, std::size_t{5}}) {
    cb.params.top_t = top;
    // A threshold near the middle of the adjusted distances keeps both
    // outcomes of the gate in play.
    std::vector<double> all_adj;
    for (const auto& f : fused) {
      for (std::size_t d = 0; d < cb.size(); ++d) all_adj.push_back(dist(f, cb.centroids[d]) - cb.radii[d]);
    }
    std::nth_element(all_adj.begin(), all_adj.begin() + all_adj.size() / 50, all_adj.end());
    cb.params.tau_s = all_adj[all_adj.size() / 50];
    BitString expected_all(cb.size());
    for (const auto& f : fused) {
      std::vector<std::pair<double, std::size_t>> adj;
      for (std::size_t d = 0; d < cb.size(); ++d) adj.push_back({dist(f, cb.centroids[d]) - cb.radii[d], d});
      std::sort(adj.begin(), adj.end());
      BitString expected(cb.size());
      for (std::size_t i = 0; i < top; ++i) {
        if (adj[i].first < cb.params.tau_s) expected.set(adj[i].second);
      }
      const std::vector<Vector> one{f};
      if (!(encode_bitstring(one, cb) == expected)) ++mismatches;
      expected_all = expected_all | expected;
    }
    if (!(encode_bitstring(fused, cb) == expected_all)) ++mismatches;
    set_bits += expected_all.ones();
  }
  return {mismatches == 0, fmt("%zu mismatches over 202 encodings (%zu bits set in the two unions)", mismatches, set_bits)};
}

Outcome threshold_curve() {
  const double mid = adaptive_threshold(35.0, 0.45, 0.4, 35.0);
  // The rise is checked on the headroom 1 - tau, which the mask uses for its
  // comparisons; tau itself saturates at 1.0 in double precision.
  bool increasing = true, non_decreasing = true;
  std::size_t saturated = 0;
  for (int t = 2; t <= 200; ++t) {
    if (!(threshold_headroom(t, 0.45, 0.4, 35.0) < threshold_headroom(t - 1, 0.45, 0.4, 35.0))) increasing = false;
    if (adaptive_threshold(t, 0.45, 0.4, 35.0) < adaptive_threshold(t - 1, 0.45, 0.4, 35.0)) non_decreasing = false;
    if (adaptive_threshold(t, 0.45, 0.4, 35.0) == 1.0) ++saturated;
  }
  return {std::abs(mid - 0.725) <= 1e-12 && increasing && non_decreasing,
          fmt("tau(t = n_mean) = %.15f, strictly increasing over 1..200: %s (tau rounds to 1.0 at %zu ranks)", mid,
              increasing && non_decreasing ? "yes" : "no", saturated)};
}

Outcome pair_budget() {
  const LgsParams p{};
  const std::size_t mid = lgs_pair_budget(35, 50, p);
  const std::size_t lo = lgs_pair_budget(0, 0, p);
  const std::size_t hi = lgs_pair_budget(500, 500, p);
  return {mid == 7 && lo == 4 && hi == 10, fmt("n_L(35) = %zu, n_L(0) = %zu, n_L(500) = %zu", mid, lo, hi)};
}

Outcome intersection_arithmetic() {
  BitString a(10), b(10), c(10);
  for (std::size_t i : {0, 1, 2}) a.set(i);
  for (std::size_t i : {1, 2, 5, 6}) b.set(i);
  for (std::size_t i : {7, 8, 9}) c.set(i);
  const double s = intersection_score(a, b).value;
  const double id = intersection_score(b, b).value;
  const double dis = intersection_score(a, c).value;
  return {s == 0.56 && id == 1.0 && dis == 0.0, fmt("(3,4,2) -> %.17g, identity -> %g, disjoint -> %g", s, id, dis)};
}

Outcome protocol_counts() {
  const PairSet a = fvc_pairs(100, 8);
  const PairSet b = fvc_pairs(140, 12);
  return {a.genuine.size() == 2800 && a.impostor.size() == 4950 && b.genuine.size() == 9240 && b.impostor.size() == 9730,
          fmt("(100,8) -> (%zu, %zu), (140,12) -> (%zu, %zu)", a.genuine.size(), a.impostor.size(), b.genuine.size(),
              b.impostor.size())};
}

Outcome separation() {
  const EndToEnd& r = end_to_end();
  const double bits = r.plain.report.eer;
  const double trained = r.training.trained.report.eer;
  const double untrained = r.training.untrained.report.eer;
  return {bits < 0.25 && trained <= untrained && r.seconds < 300.0,
          fmt("bit-string EER %.4f, bit-training EER %.4f vs %.4f untrained, %.1f s", bits, trained, untrained, r.seconds)};
}

Outcome compression() {
  const EndToEnd& r = end_to_end();
  const Evaluation folded = evaluate_folded(r.features, r.bits, 100);
  bool identical_one = true;
  for (const auto& b : r.bits) {
    const BitString f = fold_compress(b, 100);
    if (f.ones() > 0 && intersection_score(f, f).value != 1.0) identical_one = false;
  }
  const double delta = folded.report.eer - r.plain.report.eer;
  return {delta <= 0.05 && identical_one, fmt("EER %.4f at 200 bits, %.4f at 100 bits (change %+.4f), self-score 1: %s",
                                             r.plain.report.eer, folded.report.eer, delta, identical_one ? "yes" : "no")};
}

// Mutates a valid encoding: byte flips, truncation, splices and inserts.
std::vector<std::uint8_t> mutate(std::vector<std::uint8_t> bytes, Rng& rng) {
  const std::size_t edits = 1 + uniform_index(rng, 4);
  for (std::size_t e = 0; e < edits; ++e) {
    const std::size_t op = uniform_index(rng, 5);
    if (bytes.empty()) {
      bytes.push_back(static_cast<std::uint8_t>(uniform_index(rng, 256)));
      continue;
    }
    const std::size_t at = uniform_index(rng, bytes.size());
    switch (op) {
      case 0: bytes[at] = static_cast<std::uint8_t>(uniform_index(rng, 256)); break;
      case 1: bytes[at] ^= static_cast<std::uint8_t>(1u << uniform_index(rng, 8)); break;
      case 2: bytes.resize(at); break;
      case 3: bytes.insert(bytes.begin() + static_cast<std::ptrdiff_t>(at), static_cast<std::uint8_t>(uniform_index(rng, 256))); break;
      default: {
        static const char* tokens[] = {"-1", "1e309", "nan", "inf", "\n", " ", "#", "99999999999", "0x10", "fpt"};
        const std::string tok = tokens[uniform_index(rng, 10)];
        bytes.insert(bytes.begin() + static_cast<std::ptrdiff_t>(at), tok.begin(), tok.end());
      }
    }
  }
  return bytes;
}

MinutiaTemplate random_template(Rng& rng, std::size_t n) {
  MinutiaTemplate t;
  t.width = 200 + static_cast<int>(uniform_index(rng, 300));
  t.height = 200 + static_cast<int>(uniform_index(rng, 300));
  for (std::size_t i = 0; i < n; ++i) {
    t.minutiae.push_back({std::floor(uniform(rng, 0, t.width)), std::floor(uniform(rng, 0, t.height)),
                          uniform(rng, 0, kTwoPi), static_cast<MinutiaKind>(uniform_index(rng, 3)),
                          static_cast<int>(uniform_index(rng, 101))});
  }
  return t;
}

Outcome parser_robustness() {
  Rng rng = make_rng(113, {});
  std::size_t typed = 0, valid = 0, untyped = 0;
  for (int i = 0; i < 10000; ++i) {
    const MinutiaTemplate seed = random_template(rng, uniform_index(rng, 30));
    const bool iso = i % 2 == 0;
    std::vector<std::uint8_t> base;
    if (iso) {
      base = serialize_iso19794_2(seed);
    } else {
      const std::string text = serialize_text_template(seed);
      base.assign(text.begin(), text.end());
    }
    const auto input = mutate(std::move(base), rng);
    try {
      if (iso) {
        parse_iso19794_2(input);
      } else {
        parse_text_template(std::string_view(reinterpret_cast<const char*>(input.data()), input.size()));
      }
      ++valid;
    } catch (const Error&) {
      ++typed;
    } catch (...) {
      ++untyped;
    }
  }

  std::size_t round_trip_failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const MinutiaTemplate t = random_template(rng, uniform_index(rng, 60));
    const MinutiaTemplate text = parse_text_template(serialize_text_template(t));
    const auto iso = parse_iso19794_2(serialize_iso19794_2(t));
    bool ok = iso.size() == 1 && text.minutiae.size() == t.minutiae.size() &&
              iso[0].minutiae.size() == t.minutiae.size() && text.width == t.width && text.height == t.height;
    for (std::size_t k = 0; ok && k < t.minutiae.size(); ++k) {
      const Minutia& m = t.minutiae[k];
      const Minutia& a = text.minutiae[k];
      const Minutia& b = iso[0].minutiae[k];
      double da = std::abs(a.theta - m.theta), db = std::abs(b.theta - m.theta);
      db = std::min(db, kTwoPi - db);
      ok = a.x == m.x && a.y == m.y && da < 1e-6 && a.kind == m.kind && a.quality == m.quality && b.x == m.x &&
           b.y == m.y && db <= std::numbers::pi / 256 + 1e-12 && b.kind == m.kind;
    }
    if (!ok) ++round_trip_failures;
  }
  return {untyped == 0 && round_trip_failures == 0,
          fmt("10000 fuzzed inputs: %zu typed errors, %zu valid, %zu other; %zu/1000 round-trip failures", typed, valid,
              untyped, round_trip_failures)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"MBLS normalization", mbls_normalization},
      {"matched-pair scenarios", fig5_scenarios},
      {"PCA distance preservation", pca_distances},
      {"rigid-motion invariance", rigid_invariance},
      {"k-means monotone objective and assignment", kmeans_behaviour},
      {"bit conversion oracle", encode_oracle},
      {"adaptive threshold", threshold_curve},
      {"LGS pair budget", pair_budget},
      {"intersection score arithmetic", intersection_arithmetic},
      {"FVC protocol counts", protocol_counts},
      {"end-to-end separation", separation},
      {"fold compression", compression},
      {"parser robustness", parser_robustness},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "fpbits/fpbits.hpp"

namespace fpbits {
namespace {

// EER oracle: for every pair of operating points, the chord between them
// crosses FAR = FRR somewhere; the smallest crossing value over all chords is
// the EER of the convex hull.
double chord_oracle(std::vector<double> g, std::vector<double> im) {
  std::vector<double> ts(g);
  ts.insert(ts.end(), im.begin(), im.end());
  ts.push_back(std::numeric_limits<double>::infinity());
  std::vector<std::pair<double, double>> pts;
  for (double t : ts) {
    double far = 0, frr = 0;
    for (double s : im) far += s >= t;
    for (double s : g) frr += s < t;
    pts.push_back({far / im.size(), frr / g.size()});
  }
  double best = 1.0;
  for (const auto& p : pts) {
    for (const auto& q : pts) {
      const double dp = p.second - p.first, dq = q.second - q.first;
      if (dp == 0) best = std::min(best, p.first);
      if (dp > 0 && dq < 0) {
        const double s = dp / (dp - dq);
        best = std::min(best, p.first + s * (q.first - p.first));
      }
    }
  }
  return best;
}

TEST(FvcPairs, Counts) {
  auto p = fvc_pairs(100, 8);
  EXPECT_EQ(p.genuine.size(), 2800u);
  EXPECT_EQ(p.impostor.size(), 4950u);
  p = fvc_pairs(140, 12);
  EXPECT_EQ(p.genuine.size(), 9240u);
  EXPECT_EQ(p.impostor.size(), 9730u);
  for (std::size_t s = 2; s < 12; ++s) {
    for (std::size_t m = 2; m < 9; ++m) {
      const auto q = fvc_pairs(s, m);
      EXPECT_EQ(q.genuine.size(), s * m * (m - 1) / 2);
      EXPECT_EQ(q.impostor.size(), s * (s - 1) / 2);
      for (const auto& pair : q.impostor) {
        EXPECT_EQ(pair.a.impression, 0u);
        EXPECT_EQ(pair.b.impression, 0u);
        EXPECT_LT(pair.a.subject, pair.b.subject);
      }
      for (const auto& pair : q.genuine) {
        EXPECT_EQ(pair.a.subject, pair.b.subject);
        EXPECT_LT(pair.a.impression, pair.b.impression);
      }
    }
  }
}

TEST(Eer, Examples) {
  const std::vector<double> g{0.9, 0.8}, im{0.85, 0.1};
  EXPECT_NEAR(compute_eer(g, im, Polarity::Similarity).eer, 0.25, 1e-12);
  const std::vector<double> same{0.1, 0.4, 0.7};
  EXPECT_NEAR(compute_eer(same, same, Polarity::Similarity).eer, 0.5, 1e-12);
  const std::vector<double> hi{0.8, 0.9}, lo{0.1, 0.2, 0.3};
  EXPECT_EQ(compute_eer(hi, lo, Polarity::Similarity).eer, 0.0);
  EXPECT_EQ(compute_eer(lo, hi, Polarity::Dissimilarity).eer, 0.0);
  EXPECT_THROW(compute_eer(std::vector<double>{}, lo, Polarity::Similarity), Error);
}

TEST(Eer, PolarityMirror) {
  Rng rng = make_rng(2, {});
  std::vector<double> g(40), im(60);
  for (auto& x : g) x = uniform(rng, 0.2, 1.0);
  for (auto& x : im) x = uniform(rng, 0.0, 0.7);
  std::vector<double> ng, nim;
  for (double x : g) ng.push_back(-x);
  for (double x : im) nim.push_back(-x);
  EXPECT_NEAR(compute_eer(g, im, Polarity::Similarity).eer, compute_eer(ng, nim, Polarity::Dissimilarity).eer, 1e-12);
}

TEST(Eer, MatchesChordOracleAndRocIsMonotone) {
  Rng rng = make_rng(3, {});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> g(1 + uniform_index(rng, 25)), im(1 + uniform_index(rng, 25));
    // coarse values force ties
    for (auto& x : g) x = std::round(uniform(rng, 0.2, 1.0) * 10) / 10;
    for (auto& x : im) x = std::round(uniform(rng, 0.0, 0.8) * 10) / 10;
    const auto rep = compute_eer(g, im, Polarity::Similarity);
    EXPECT_NEAR(rep.eer, chord_oracle(g, im), 1e-12);
    EXPECT_GE(rep.eer, 0.0);
    EXPECT_LE(rep.eer, 1.0);
    for (std::size_t i = 1; i < rep.roc.size(); ++i) {
      EXPECT_LE(rep.roc[i].far, rep.roc[i - 1].far);
      EXPECT_GE(rep.roc[i].frr, rep.roc[i - 1].frr);
    }
  }
}

SynthParams tiny(std::size_t subjects, std::size_t impressions) {
  SynthParams p;
  p.n_subjects = subjects;
  p.n_impressions = impressions;
  p.width = p.height = 200;
  p.n_minutiae = 25;
  p.seed = 77;
  return p;
}

TEST(Synth, DeterministicAcrossRuns) {
  const auto a = synth_dataset(tiny(3, 2));
  const auto b = synth_dataset(tiny(3, 2));
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(serialize_text_template(a[i].minutiae), serialize_text_template(b[i].minutiae));
    EXPECT_EQ(a[i].image.pixels, b[i].image.pixels);
  }
  auto other = tiny(3, 2);
  other.seed = 78;
  EXPECT_NE(serialize_text_template(synth_dataset(other)[0].minutiae), serialize_text_template(a[0].minutiae));
}

TEST(Synth, ZeroNoiseReproducesMaster) {
  auto p = tiny(2, 3);
  p.max_rotation_deg = 0;
  p.max_translation = 0;
  p.jitter_sigma0 = p.jitter_sigma_slope = 0;
  p.angle_noise = 0;
  p.dropout = p.spurious = 0;
  p.pixel_noise = 0;
  for (std::size_t s = 0; s < 2; ++s) {
    const auto master = make_master(p, s);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto imp = make_impression(p, master, s, i);
      ASSERT_EQ(imp.minutiae.minutiae.size(), master.minutiae.size());
      for (std::size_t k = 0; k < master.minutiae.size(); ++k) {
        EXPECT_NEAR(imp.minutiae.minutiae[k].x, master.minutiae[k].x, 1e-9);
        EXPECT_NEAR(imp.minutiae.minutiae[k].y, master.minutiae[k].y, 1e-9);
        EXPECT_NEAR(imp.minutiae.minutiae[k].theta, master.minutiae[k].theta, 1e-12);
      }
      if (i > 0) {
        EXPECT_EQ(imp.image.pixels, make_impression(p, master, s, 0).image.pixels);
      }
    }
  }
}

TEST(Synth, MinimumSeparationAndBounds) {
  const auto p = tiny(4, 1);
  for (std::size_t s = 0; s < 4; ++s) {
    const auto m = make_master(p, s);
    for (std::size_t i = 0; i < m.minutiae.size(); ++i) {
      EXPECT_GE(m.minutiae[i].x, p.margin);
      EXPECT_LE(m.minutiae[i].x, p.width - 1 - p.margin);
      for (std::size_t j = i + 1; j < m.minutiae.size(); ++j) {
        EXPECT_GE(std::hypot(m.minutiae[i].x - m.minutiae[j].x, m.minutiae[i].y - m.minutiae[j].y), p.min_separation);
      }
    }
  }
}

TEST(Config, TextRoundTripAndErrors) {
  PipelineConfig c = PipelineConfig::case1();
  c.sigma_t_slope = 0.1 + 1e-17;
  c.mask_mode = MaskMode::EnrolledOnly;
  c.fusion_norm = FusionNorm::Corpus;
  c.seed = 123456789012345ULL;
  const auto text = config_to_text(c);
  EXPECT_EQ(config_to_text(parse_config(text)), text);
  const auto d = parse_config("# comment\n tau_s = -0.2 \n\nK=64\n");
  EXPECT_EQ(d.tau_s, -0.2);
  EXPECT_EQ(d.K, 64u);
  EXPECT_EQ(d.n_p, PipelineConfig{}.n_p);
  for (const char* bad : {"bogus = 1\n", "K = -3\n", "K\n", "tau_s = abc\n", "mask_mode = sometimes\n"}) {
    try {
      parse_config(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadConfig) << bad;
    }
  }
  PipelineConfig v;
  v.min_nL = 11;
  EXPECT_THROW(v.validate(), Error);
}

class TinyPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    samples_ = new std::vector<Sample>(synth_dataset(tiny(10, 4)));
    PipelineConfig c;
    c.n_p = 8;
    c.K = 30;
    c.N_c = 40;
    c.pca_max_samples = 300;
    c.top_t = 2;
    model_ = new Model(train_model(*samples_, c));
    features_ = new std::vector<ImageFeatures>(extract_all(*model_, *samples_));
  }
  static void TearDownTestSuite() {
    delete samples_;
    delete model_;
    delete features_;
  }
  static std::vector<Sample>* samples_;
  static Model* model_;
  static std::vector<ImageFeatures>* features_;
};
std::vector<Sample>* TinyPipeline::samples_ = nullptr;
Model* TinyPipeline::model_ = nullptr;
std::vector<ImageFeatures>* TinyPipeline::features_ = nullptr;

TEST_F(TinyPipeline, LgsGenuineCloserThanImpostor) {
  const auto ev = evaluate_lgs(*features_, model_->config.lgs());
  EXPECT_EQ(ev.genuine_pairs, 60u);
  EXPECT_EQ(ev.impostor_pairs, 45u);
  double g = 0, im = 0;
  for (double s : ev.report.genuine_scores) g += s;
  for (double s : ev.report.impostor_scores) im += s;
  EXPECT_LT(g / 60, im / 45);
}

TEST_F(TinyPipeline, ModelContainerRoundTrip) {
  const auto bytes = serialize_model(*model_);
  const Model back = deserialize_model(bytes);
  EXPECT_EQ(serialize_model(back), bytes);
  EXPECT_EQ(config_to_text(back.config), config_to_text(model_->config));
  for (std::size_t i = 0; i < features_->size(); i += 7) {
    EXPECT_EQ(encode_features(back, extract_features(back, (*samples_)[i])), encode_features(*model_, (*features_)[i]));
  }
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW(deserialize_model(truncated), Error);
  auto bad = bytes;
  bad[0] = 'X';
  try {
    deserialize_model(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadMagic);
  }
}

TEST_F(TinyPipeline, BitStringAndFingerContainersRoundTrip) {
  BitStringSet set{model_->codebook.size(), model_->codebook.size(), {}};
  std::vector<BitString> bits;
  for (const auto& f : *features_) {
    bits.push_back(encode_features(*model_, f));
    set.entries.push_back({f.subject_id, f.impression_id, f.minutia_count, bits.back()});
  }
  const auto bytes = serialize_bitstrings(set);
  const auto back = deserialize_bitstrings(bytes);
  EXPECT_EQ(serialize_bitstrings(back), bytes);
  ASSERT_EQ(back.entries.size(), set.entries.size());
  EXPECT_EQ(back.entries[5].bits, set.entries[5].bits);

  auto cfg = model_->config;
  cfg.enroll_count = 2;
  Model m2 = *model_;
  m2.config = cfg;
  const auto bt = evaluate_bit_training(m2, *features_, bits);
  EXPECT_EQ(bt.trained.genuine_pairs, 10u * 2 * 2);
  EXPECT_EQ(bt.trained.impostor_pairs, 10u * 9 * 2);
  EXPECT_EQ(bt.untrained.genuine_pairs, bt.trained.genuine_pairs);
  const auto fb = serialize_fingers(bt.fingers, model_->codebook.size());
  const auto fingers = deserialize_fingers(fb);
  EXPECT_EQ(serialize_fingers(fingers, model_->codebook.size()), fb);
  EXPECT_EQ(fingers[3].model.mask, bt.fingers[3].model.mask);
  EXPECT_EQ(fingers[3].impressions, (std::vector<std::string>{"1", "2"}));
}

TEST_F(TinyPipeline, FullDeterminism) {
  PipelineConfig c = model_->config;
  const Model again = train_model(*samples_, c);
  EXPECT_EQ(serialize_model(again), serialize_model(*model_));
}

TEST_F(TinyPipeline, DatasetFilesRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "fpbits_dataset_test";
  std::filesystem::remove_all(dir);
  const std::vector<Sample> few(samples_->begin(), samples_->begin() + 3);
  save_dataset(dir, few);
  const auto back = load_dataset(dir);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].minutiae.subject_id, few[i].minutiae.subject_id);
    EXPECT_EQ(back[i].minutiae.impression_id, few[i].minutiae.impression_id);
    EXPECT_EQ(back[i].image.pixels, few[i].image.pixels);
    EXPECT_EQ(serialize_text_template(back[i].minutiae), serialize_text_template(few[i].minutiae));
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace fpbits

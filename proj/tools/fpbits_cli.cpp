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

// Command-line front end: synthetic data, training, encoding, enrollment,
// matching and protocol evaluation.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fpbits/fpbits.hpp"

namespace fs = std::filesystem;
using namespace fpbits;

namespace {

std::string text_of(const std::vector<std::uint8_t>& bytes) { return {bytes.begin(), bytes.end()}; }

Model load_model(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::ModelMissing, "no model given; run 'fpbits train' first");
  if (!fs::exists(path)) throw Error(ErrorCode::ModelMissing, "model file not found: " + path);
  return deserialize_model(read_file(path));
}

std::size_t parse_count(std::string_view s, const char* what) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw Error(ErrorCode::BadConfig, std::string("bad ") + what + ": '" + std::string(s) + "'");
  }
  return v;
}

// Accepts plain integers, "K" and "K/<n>" (integer division).
std::vector<std::size_t> parse_lengths(const std::string& list, std::size_t k) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string::npos) comma = list.size();
    const std::string_view tok = std::string_view(list).substr(pos, comma - pos);
    pos = comma + 1;
    if (tok.empty()) continue;
    if (tok == "K") {
      out.push_back(k);
    } else if (tok.starts_with("K/")) {
      const std::size_t d = parse_count(tok.substr(2), "length divisor");
      if (d == 0) throw Error(ErrorCode::BadLength, "length divisor must be positive");
      out.push_back(k / d);
    } else {
      out.push_back(parse_count(tok, "length"));
    }
  }
  if (out.empty()) throw Error(ErrorCode::BadLength, "no fold lengths given");
  return out;
}

PipelineConfig build_config(const std::string& preset, const std::string& file, const std::vector<std::string>& sets) {
  PipelineConfig c;
  if (preset == "case1") {
    c = PipelineConfig::case1();
  } else if (preset == "case2") {
    c = PipelineConfig::case2();
  } else if (!preset.empty()) {
    throw Error(ErrorCode::BadConfig, "unknown preset '" + preset + "' (case1 or case2)");
  }
  if (!file.empty()) c = parse_config(text_of(read_file(file)), c);
  std::string overrides;
  for (const auto& s : sets) overrides += s + "\n";
  return parse_config(overrides, c);
}

std::vector<BitString> encode_all(const Model& model, std::span<const ImageFeatures> features) {
  std::vector<BitString> out(features.size());
  parallel_for(features.size(), [&](std::size_t i) { out[i] = encode_features(model, features[i]); });
  return out;
}

void write_rows(const fs::path& path, std::span<const ScoreRow> rows) {
  std::string out = "# subject_a impression_a subject_b impression_b kind score\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.score);
    out += r.subject_a + " " + r.impression_a + " " + r.subject_b + " " + r.impression_b + " " + to_string(r.kind) +
           " " + buf + "\n";
  }
  write_file_atomic(path, out);
}

void write_report(const fs::path& path, const std::string& matcher, const std::string& pairing, const Evaluation& ev) {
  std::string out;
  char buf[160];
  out += "# matcher " + matcher + "\n";
  out += "# pairing " + pairing + "\n";
  std::snprintf(buf, sizeof buf, "# genuine_pairs %zu\n# impostor_pairs %zu\n# eer %.6f\n", ev.genuine_pairs,
                ev.impostor_pairs, ev.report.eer);
  out += buf;
  out += "far,frr,threshold\n";
  for (const RocPoint& p : ev.report.roc) {
    std::snprintf(buf, sizeof buf, "%.8f,%.8f,%.17g\n", p.far, p.frr, p.threshold);
    out += buf;
  }
  write_file_atomic(path, out);
}

struct PairLine {
  std::string subject_a, impression_a, subject_b, impression_b;
};

std::vector<PairLine> read_pairs(const std::string& path) {
  const std::string text = text_of(read_file(path));
  std::vector<PairLine> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line = std::string_view(text).substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 4) throw Error(ErrorCode::MalformedHeader, "pair line needs 4 fields", line_no);
    out.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2]), std::string(fields[3])});
  }
  return out;
}

std::string key_of(const std::string& subject, const std::string& impression) { return subject + "\t" + impression; }

void print_summary(const std::string& label, const Evaluation& ev) {
  std::printf("%s: %zu genuine, %zu impostor, EER %.4f\n", label.c_str(), ev.genuine_pairs, ev.impostor_pairs,
              ev.report.eer);
}

const char* kTrainedPairing =
    "enrolled strings of each finger vs its own test impressions (genuine) and vs the first test impression of every "
    "other finger (impostor)";

int run_inspect(const std::string& path) {
  const auto bytes = read_file(path);
  const std::string magic(bytes.begin(), bytes.begin() + std::min<std::size_t>(4, bytes.size()));
  if (magic == "FPBM") {
    const Model m = deserialize_model(bytes);
    std::printf("model %s\n", path.c_str());
    std::printf("lattice: %zu MBLS points, %zu TBLS points\n", m.geometry.lattice_m.size(), m.geometry.lattice_t.size());
    std::printf("subspaces: %zu -> %zu and %zu -> %zu\n", m.pca_m.input_dim(), m.pca_m.output_dim(),
                m.pca_t.input_dim(), m.pca_t.output_dim());
    const auto& cb = m.codebook;
    const auto [rmin, rmax] = std::minmax_element(cb.radii.begin(), cb.radii.end());
    const auto [hmin, hmax] = std::minmax_element(cb.cardinalities.begin(), cb.cardinalities.end());
    std::printf("codebook: K=%zu dim=%zu radii [%.4f, %.4f] cardinalities [%zu, %zu]\n", cb.size(), cb.dim(), *rmin,
                *rmax, *hmin, *hmax);
    std::printf("config:\n%s", config_to_text(m.config).c_str());
  } else if (magic == "FPBS") {
    const BitStringSet set = deserialize_bitstrings(bytes);
    double ones = 0.0;
    std::size_t empty = 0;
    for (const auto& e : set.entries) {
      ones += static_cast<double>(e.bits.ones());
      if (e.bits.ones() == 0) ++empty;
    }
    std::printf("bit-strings %s\nK=%zu fold_length=%zu entries=%zu mean ones=%.2f empty=%zu\n", path.c_str(), set.K,
                set.fold_length, set.entries.size(), set.entries.empty() ? 0.0 : ones / set.entries.size(), empty);
  } else if (magic == "FPFM") {
    const auto fingers = deserialize_fingers(bytes);
    double mask = 0.0;
    for (const auto& f : fingers) mask += static_cast<double>(f.model.mask.ones());
    std::printf("enrolled fingers %s\nfingers=%zu mean selected bits=%.2f\n", path.c_str(), fingers.size(),
                fingers.empty() ? 0.0 : mask / fingers.size());
    for (const auto& f : fingers) {
      std::printf("  %s: %zu enrolled, n_mean %.1f, %zu selected\n", f.model.finger_id.c_str(), f.enrolled.size(),
                  f.model.n_mean, f.model.mask.ones());
    }
  } else {
    throw Error(ErrorCode::BadMagic, "not a model, bit-string or finger file: " + path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fingerprint bit-string templates: training, encoding and evaluation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset of templates and images");
  SynthParams sp;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--subjects", sp.n_subjects, "Number of subjects")->capture_default_str();
  synth->add_option("--impressions", sp.n_impressions, "Impressions per subject")->capture_default_str();
  synth->add_option("--seed", sp.seed, "Random seed")->capture_default_str();
  synth->add_option("--width", sp.width, "Image width")->capture_default_str();
  synth->add_option("--height", sp.height, "Image height")->capture_default_str();
  synth->add_option("--minutiae", sp.n_minutiae, "Minutiae per master finger")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Learn subspaces and codebook from a training set");
  std::string train_data, train_out, preset, config_file;
  std::vector<std::string> sets;
  std::size_t augment = 0;
  train->add_option("--data", train_data, "Training dataset directory")->required();
  train->add_option("--out", train_out, "Model file")->required();
  train->add_option("--preset", preset, "case1 or case2 parameter preset");
  train->add_option("--config", config_file, "key = value config file");
  train->add_option("--set", sets, "Override one config key, e.g. --set K=200");
  train->add_option("--augment", augment, "Random structures added to the clustering pool");

  // encode
  auto* encode = app.add_subcommand("encode", "Convert templates to bit-strings");
  std::string model_path, data_dir, encode_out;
  encode->add_option("--model", model_path, "Model file");
  encode->add_option("--data", data_dir, "Dataset directory")->required();
  encode->add_option("--out", encode_out, "Bit-string file")->required();
  std::size_t fold = 0;
  encode->add_option("--fold", fold, "OR-fold every string to this length");

  // enroll
  auto* enroll = app.add_subcommand("enroll", "Bit-train one model per finger on its first impressions");
  std::string enroll_out;
  std::size_t enroll_count = 0;
  enroll->add_option("--model", model_path, "Model file");
  enroll->add_option("--data", data_dir, "Dataset directory")->required();
  enroll->add_option("--out", enroll_out, "Finger model file")->required();
  enroll->add_option("--count", enroll_count, "Enrollment impressions per finger (default: model config)");

  // match
  auto* match = app.add_subcommand("match", "Score the pairs listed in a pairs file");
  std::string bits_path, fingers_path, pairs_path, match_out, match_kind = "intersection";
  match->add_option("--pairs", pairs_path, "Lines of: subject_a impression_a subject_b impression_b")->required();
  match->add_option("--out", match_out, "Score file")->required();
  match->add_option("--kind", match_kind, "intersection or lgs")->capture_default_str();
  match->add_option("--bits", bits_path, "Bit-strings (intersection)");
  match->add_option("--fingers", fingers_path, "Enrolled fingers; side a is then an enrolled string (masked score)");
  match->add_option("--model", model_path, "Model file (lgs)");
  match->add_option("--data", data_dir, "Dataset directory (lgs)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Run the FVC protocol and write EER and ROC");
  std::string eval_out, scores_out, matcher = "bits";
  evaluate->add_option("--model", model_path, "Model file");
  evaluate->add_option("--data", data_dir, "Dataset directory")->required();
  evaluate->add_option("--out", eval_out, "ROC report (CSV)")->required();
  evaluate->add_option("--matcher", matcher, "bits, lgs, trained or untrained")->capture_default_str();
  evaluate->add_option("--scores", scores_out, "Also write every scored pair");

  // compress
  auto* compress = app.add_subcommand("compress", "EER of the bit-string matcher against fold length");
  std::string lengths = "K,K/2,K/3", compress_out;
  compress->add_option("--model", model_path, "Model file");
  compress->add_option("--data", data_dir, "Dataset directory")->required();
  compress->add_option("--lengths", lengths, "Comma-separated lengths; K and K/n allowed")->capture_default_str();
  compress->add_option("--out", compress_out, "CSV of length,eer")->required();

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Summarize a model, bit-string or finger file");
  std::string inspect_path;
  inspect->add_option("file", inspect_path, "File to inspect")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto samples = synth_dataset(sp);
      save_dataset(synth_out, samples);
      std::printf("wrote %zu samples to %s\n", samples.size(), synth_out.c_str());
    } else if (train->parsed()) {
      PipelineConfig cfg = build_config(preset, config_file, sets);
      if (train->count("--augment")) cfg.augment = augment;
      const auto samples = load_dataset(train_data);
      TrainingSummary summary;
      const Model model = train_model(samples, cfg, &summary);
      write_file_atomic(train_out, serialize_model(model));
      std::printf("trained on %zu images (%zu minutiae, %zu PCA samples, %zu augmented); k-means %zu iterations%s\n",
                  summary.images, summary.minutiae, summary.pca_samples, summary.augmented,
                  summary.kmeans_iterations, summary.kmeans_converged ? ", converged" : "");
    } else if (encode->parsed()) {
      const Model model = load_model(model_path);
      const auto features = extract_all(model, load_dataset(data_dir));
      const auto bits = encode_all(model, features);
      const std::size_t length = fold == 0 ? model.codebook.size() : fold;
      BitStringSet set{model.codebook.size(), length, {}};
      for (std::size_t i = 0; i < features.size(); ++i) {
        set.entries.push_back({features[i].subject_id, features[i].impression_id, features[i].minutia_count,
                               length == set.K ? bits[i] : fold_compress(bits[i], length)});
      }
      write_file_atomic(encode_out, serialize_bitstrings(set));
      std::printf("encoded %zu images into %zu-bit strings\n", set.entries.size(), length);
    } else if (enroll->parsed()) {
      Model model = load_model(model_path);
      if (enroll->count("--count")) model.config.enroll_count = enroll_count;
      const std::size_t n = model.config.enroll_count;
      if (n == 0) throw Error(ErrorCode::EmptyEnrollment, "enrollment count must be positive");
      const auto features = extract_all(model, load_dataset(data_dir));
      const auto bits = encode_all(model, features);
      const SubjectGroups groups = group_by_subject(std::span<const ImageFeatures>(features),
                                                    [](const ImageFeatures& f) { return f.subject_id; },
                                                    [](const ImageFeatures& f) { return f.impression_id; });
      std::vector<EnrolledFinger> fingers(groups.subjects.size());
      parallel_for(groups.subjects.size(), [&](std::size_t s) {
        const auto& images = groups.images[s];
        if (images.size() < n) {
          throw Error(ErrorCode::EmptyEnrollment, groups.subjects[s] + " has fewer than " + std::to_string(n) +
                                                      " impressions");
        }
        std::vector<ImageFeatures> fs;
        std::vector<BitString> bs;
        for (std::size_t j = 0; j < n; ++j) {
          fs.push_back(features[images[j]]);
          bs.push_back(bits[images[j]]);
        }
        fingers[s] = enroll_finger(model, groups.subjects[s], fs, bs);
      });
      write_file_atomic(enroll_out, serialize_fingers(fingers, model.codebook.size()));
      std::printf("enrolled %zu fingers on %zu impressions each\n", fingers.size(), n);
    } else if (match->parsed()) {
      const auto pairs = read_pairs(pairs_path);
      std::vector<ScoreRow> rows;
      if (match_kind == "lgs") {
        const Model model = load_model(model_path);
        if (data_dir.empty()) throw Error(ErrorCode::IoError, "lgs matching needs --data");
        const auto features = extract_all(model, load_dataset(data_dir));
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < features.size(); ++i) {
          index[key_of(features[i].subject_id, features[i].impression_id)] = i;
        }
        auto find = [&](const std::string& s, const std::string& imp) {
          const auto it = index.find(key_of(s, imp));
          if (it == index.end()) throw Error(ErrorCode::IoError, "no image " + s + " " + imp + " in " + data_dir);
          return it->second;
        };
        for (const auto& p : pairs) {
          const auto& fa = features[find(p.subject_a, p.impression_a)];
          const auto& fb = features[find(p.subject_b, p.impression_b)];
          rows.push_back({p.subject_a, p.impression_a, p.subject_b, p.impression_b, ScoreKind::Lgs,
                          lgs_score(fa.fused, fb.fused, model.config.lgs()).value, false});
        }
      } else if (match_kind == "intersection") {
        if (bits_path.empty()) throw Error(ErrorCode::IoError, "intersection matching needs --bits");
        const BitStringSet set = deserialize_bitstrings(read_file(bits_path));
        std::map<std::string, const BitString*> index;
        for (const auto& e : set.entries) index[key_of(e.subject_id, e.impression_id)] = &e.bits;
        auto find = [&](const std::string& s, const std::string& imp) {
          const auto it = index.find(key_of(s, imp));
          if (it == index.end()) throw Error(ErrorCode::IoError, "no bit-string for " + s + " " + imp);
          return it->second;
        };
        std::vector<EnrolledFinger> fingers;
        if (!fingers_path.empty()) fingers = deserialize_fingers(read_file(fingers_path));
        for (const auto& p : pairs) {
          double score = 0.0;
          if (fingers.empty()) {
            score = intersection_score(*find(p.subject_a, p.impression_a), *find(p.subject_b, p.impression_b)).value;
          } else {
            const auto f = std::find_if(fingers.begin(), fingers.end(),
                                        [&](const EnrolledFinger& e) { return e.model.finger_id == p.subject_a; });
            if (f == fingers.end()) throw Error(ErrorCode::IoError, "finger " + p.subject_a + " is not enrolled");
            const auto j = std::find(f->impressions.begin(), f->impressions.end(), p.impression_a);
            if (j == f->impressions.end()) {
              throw Error(ErrorCode::IoError, "impression " + p.impression_a + " is not enrolled for " + p.subject_a);
            }
            const auto jj = static_cast<std::size_t>(j - f->impressions.begin());
            score = enrolled_score(*find(p.subject_b, p.impression_b), *f, jj, true, MaskMode::Both);
          }
          rows.push_back({p.subject_a, p.impression_a, p.subject_b, p.impression_b, ScoreKind::Intersection, score,
                          false});
        }
      } else {
        throw Error(ErrorCode::BadConfig, "unknown match kind '" + match_kind + "'");
      }
      write_rows(match_out, rows);
      std::printf("scored %zu pairs\n", rows.size());
    } else if (evaluate->parsed()) {
      const Model model = load_model(model_path);
      const auto features = extract_all(model, load_dataset(data_dir));
      Evaluation ev;
      std::string pairing = "FVC: all same-finger pairs (genuine), first impressions across fingers (impostor)";
      if (matcher == "lgs") {
        ev = evaluate_lgs(features, model.config.lgs());
      } else if (matcher == "bits") {
        ev = evaluate_bits(features, encode_all(model, features));
      } else if (matcher == "trained" || matcher == "untrained") {
        auto bt = evaluate_bit_training(model, features, encode_all(model, features));
        ev = matcher == "trained" ? std::move(bt.trained) : std::move(bt.untrained);
        pairing = kTrainedPairing;
      } else {
        throw Error(ErrorCode::BadConfig, "unknown matcher '" + matcher + "'");
      }
      write_report(eval_out, matcher, pairing, ev);
      if (!scores_out.empty()) write_rows(scores_out, ev.rows);
      print_summary(matcher, ev);
    } else if (compress->parsed()) {
      const Model model = load_model(model_path);
      const auto features = extract_all(model, load_dataset(data_dir));
      const auto bits = encode_all(model, features);
      const auto ls = parse_lengths(lengths, model.codebook.size());
      std::string out = "length,eer\n";
      for (std::size_t len : ls) {
        const Evaluation ev = evaluate_folded(features, bits, len);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%zu,%.6f\n", len, ev.report.eer);
        out += buf;
        std::printf("length %zu: EER %.4f\n", len, ev.report.eer);
      }
      write_file_atomic(compress_out, out);
    } else if (inspect->parsed()) {
      return run_inspect(inspect_path);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "fpbits: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fpbits: unexpected failure: %s\n", e.what());
    return 3;
  }
  return 0;
}

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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpbits/binary_io.hpp"
#include "fpbits/bit_training.hpp"
#include "fpbits/bitstring.hpp"
#include "fpbits/codebook.hpp"
#include "fpbits/config.hpp"
#include "fpbits/local_structures.hpp"
#include "fpbits/subspace_fusion.hpp"

namespace fpbits {

/// Everything needed to turn a template + image into a bit-string.
struct Model {
  PipelineConfig config;
  StructureGeometry geometry;
  PcaModel pca_m;
  PcaModel pca_t;
  std::optional<ComponentStats> stats_m;  // only with FusionNorm::Corpus
  std::optional<ComponentStats> stats_t;
  Codebook codebook;
};

inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr std::uint32_t kBitsVersion = 1;
inline constexpr std::uint32_t kFingersVersion = 1;

namespace detail {

inline void expect_magic(ByteReader& r, std::string_view magic) {
  for (char c : magic) {
    if (r.remaining() == 0 || r.u8() != static_cast<std::uint8_t>(c)) {
      throw Error(ErrorCode::BadMagic, "expected '" + std::string(magic) + "' container", 0);
    }
  }
}

inline void write_magic(ByteWriter& w, std::string_view magic) {
  for (char c : magic) w.u8(static_cast<std::uint8_t>(c));
}

inline void write_lattice(ByteWriter& w, const std::vector<LatticePoint>& pts) {
  w.u32(static_cast<std::uint32_t>(pts.size()));
  for (const auto& p : pts) {
    w.u32(static_cast<std::uint32_t>(p.x));
    w.u32(static_cast<std::uint32_t>(p.y));
  }
}

inline std::vector<LatticePoint> read_lattice(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / 8) throw Error(ErrorCode::TruncatedRecord, "lattice overruns file", r.position());
  std::vector<LatticePoint> pts(n);
  for (auto& p : pts) {
    p.x = static_cast<std::int32_t>(r.u32());
    p.y = static_cast<std::int32_t>(r.u32());
  }
  return pts;
}

inline void write_pca(ByteWriter& w, const PcaModel& m) {
  w.f64_array(m.mean);
  w.u64(static_cast<std::uint64_t>(m.basis.rows()));
  w.u64(static_cast<std::uint64_t>(m.basis.cols()));
  for (Eigen::Index c = 0; c < m.basis.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.basis.rows(); ++r) w.f64(m.basis(r, c));
  }
  w.f64_array(m.explained_variance);
}

inline PcaModel read_pca(ByteReader& r) {
  PcaModel m;
  m.mean = r.f64_array();
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  if (rows != m.mean.size() || (cols != 0 && rows > r.remaining() / 8 / cols)) {
    throw Error(ErrorCode::BadModelFile, "PCA basis shape inconsistent", r.position());
  }
  m.basis.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < m.basis.cols(); ++c) {
    for (Eigen::Index i = 0; i < m.basis.rows(); ++i) m.basis(i, c) = r.f64();
  }
  m.explained_variance = r.f64_array();
  return m;
}

inline void write_stats(ByteWriter& w, const std::optional<ComponentStats>& s) {
  w.u8(s ? 1 : 0);
  if (s) {
    w.f64_array(s->mean);
    w.f64_array(s->stddev);
  }
}

inline std::optional<ComponentStats> read_stats(ByteReader& r) {
  if (r.u8() == 0) return std::nullopt;
  ComponentStats s;
  s.mean = r.f64_array();
  s.stddev = r.f64_array();
  return s;
}

}  // namespace detail

/// Versioned little-endian container; identical inputs give identical bytes.
inline std::vector<std::uint8_t> serialize_model(const Model& m) {
  ByteWriter w;
  detail::write_magic(w, "FPBM");
  w.u32(kModelVersion);
  w.str(config_to_text(m.config));
  w.f64(m.geometry.r_m);
  w.f64(m.geometry.r_t);
  w.f64(m.geometry.downscale_area);
  detail::write_lattice(w, m.geometry.lattice_m);
  detail::write_lattice(w, m.geometry.lattice_t);
  detail::write_pca(w, m.pca_m);
  detail::write_pca(w, m.pca_t);
  detail::write_stats(w, m.stats_m);
  detail::write_stats(w, m.stats_t);
  const Codebook& cb = m.codebook;
  w.u64(cb.params.K);
  w.u64(cb.params.N_c);
  w.f64(cb.params.tau_s);
  w.u64(cb.params.top_t);
  w.u64(cb.centroids.size());
  for (const auto& c : cb.centroids) w.f64_array(c);
  w.f64_array(cb.radii);
  w.u64(cb.cardinalities.size());
  for (std::size_t h : cb.cardinalities) w.u64(h);
  w.f64_array(cb.weights);
  w.f64_array(cb.global_mean);
  return w.take();
}

inline Model deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  detail::expect_magic(r, "FPBM");
  if (r.u32() != kModelVersion) throw Error(ErrorCode::UnsupportedVersion, "model version", 4);
  Model m;
  m.config = parse_config(r.str());
  m.geometry.r_m = r.f64();
  m.geometry.r_t = r.f64();
  m.geometry.downscale_area = r.f64();
  m.geometry.lattice_m = detail::read_lattice(r);
  m.geometry.lattice_t = detail::read_lattice(r);
  m.pca_m = detail::read_pca(r);
  m.pca_t = detail::read_pca(r);
  m.stats_m = detail::read_stats(r);
  m.stats_t = detail::read_stats(r);
  Codebook& cb = m.codebook;
  cb.params.K = r.u64();
  cb.params.N_c = r.u64();
  cb.params.tau_s = r.f64();
  cb.params.top_t = r.u64();
  const std::uint64_t k = r.u64();
  if (k > r.remaining() / 8) throw Error(ErrorCode::BadModelFile, "centroid count overruns file", r.position());
  cb.centroids.resize(k);
  for (auto& c : cb.centroids) c = r.f64_array();
  cb.radii = r.f64_array();
  const std::uint64_t nh = r.u64();
  if (nh > r.remaining() / 8) throw Error(ErrorCode::BadModelFile, "cardinality count overruns file", r.position());
  cb.cardinalities.resize(nh);
  for (auto& h : cb.cardinalities) h = r.u64();
  cb.weights = r.f64_array();
  cb.global_mean = r.f64_array();
  if (m.geometry.lattice_m.size() != m.pca_m.input_dim() || m.geometry.lattice_t.size() != m.pca_t.input_dim() ||
      cb.radii.size() != k || cb.weights.size() != k || cb.cardinalities.size() != k) {
    throw Error(ErrorCode::BadModelFile, "model sections disagree on dimensions");
  }
  if (r.remaining() != 0) throw Error(ErrorCode::BadModelFile, "trailing bytes after model", r.position());
  return m;
}

// ---------------------------------------------------------------------------
// Bit-string sets: header {version, K, fold_length}, then one entry per image.
// ---------------------------------------------------------------------------

struct EncodedImage {
  std::string subject_id;
  std::string impression_id;
  std::size_t minutia_count = 0;
  BitString bits;
};

struct BitStringSet {
  std::size_t K = 0;
  std::size_t fold_length = 0;  // == K when not folded
  std::vector<EncodedImage> entries;
};

inline std::vector<std::uint8_t> serialize_bitstrings(const BitStringSet& set) {
  ByteWriter w;
  detail::write_magic(w, "FPBS");
  w.u32(kBitsVersion);
  w.u32(static_cast<std::uint32_t>(set.K));
  w.u32(static_cast<std::uint32_t>(set.fold_length));
  w.u32(static_cast<std::uint32_t>(set.entries.size()));
  for (const auto& e : set.entries) {
    require_same_length(e.bits.size(), set.fold_length, "bit-string set entry");
    w.str(e.subject_id);
    w.str(e.impression_id);
    w.u32(static_cast<std::uint32_t>(e.minutia_count));
    w.raw(e.bits.to_bytes());
  }
  return w.take();
}

inline BitStringSet deserialize_bitstrings(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  detail::expect_magic(r, "FPBS");
  if (r.u32() != kBitsVersion) throw Error(ErrorCode::UnsupportedVersion, "bit-string version", 4);
  BitStringSet set;
  set.K = r.u32();
  set.fold_length = r.u32();
  if (set.fold_length == 0 || set.fold_length > set.K) throw Error(ErrorCode::BadLength, "bad fold length");
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    EncodedImage e;
    e.subject_id = r.str();
    e.impression_id = r.str();
    e.minutia_count = r.u32();
    e.bits = BitString::from_bytes(r.raw((set.fold_length + 7) / 8), set.fold_length);
    set.entries.push_back(std::move(e));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Enrolled fingers: FingerModel plus its enrollment bit-strings.
// ---------------------------------------------------------------------------

struct EnrolledFinger {
  FingerModel model;
  std::vector<BitString> enrolled;
  std::vector<std::string> impressions;  // impression id of each enrolled string
};

inline std::vector<std::uint8_t> serialize_fingers(std::span<const EnrolledFinger> fingers, std::size_t k) {
  ByteWriter w;
  detail::write_magic(w, "FPFM");
  w.u32(kFingersVersion);
  w.u32(static_cast<std::uint32_t>(k));
  w.u32(static_cast<std::uint32_t>(fingers.size()));
  for (const auto& f : fingers) {
    w.str(f.model.finger_id);
    w.f64(f.model.n_mean);
    w.f64(f.model.params.alpha);
    w.f64(f.model.params.beta);
    w.f64_array(f.model.power);
    w.f64_array(f.model.reliability);
    w.raw(f.model.mask.to_bytes());
    require_same_length(f.impressions.size(), f.enrolled.size(), "enrolled impressions");
    w.u32(static_cast<std::uint32_t>(f.enrolled.size()));
    for (std::size_t j = 0; j < f.enrolled.size(); ++j) {
      w.str(f.impressions[j]);
      w.raw(f.enrolled[j].to_bytes());
    }
  }
  return w.take();
}

inline std::vector<EnrolledFinger> deserialize_fingers(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  detail::expect_magic(r, "FPFM");
  if (r.u32() != kFingersVersion) throw Error(ErrorCode::UnsupportedVersion, "finger model version", 4);
  const std::size_t k = r.u32();
  const std::uint32_t n = r.u32();
  std::vector<EnrolledFinger> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    EnrolledFinger f;
    f.model.finger_id = r.str();
    f.model.n_mean = r.f64();
    f.model.params.alpha = r.f64();
    f.model.params.beta = r.f64();
    f.model.power = r.f64_array();
    f.model.reliability = r.f64_array();
    f.model.mask = BitString::from_bytes(r.raw((k + 7) / 8), k);
    const std::uint32_t m = r.u32();
    for (std::uint32_t j = 0; j < m; ++j) {
      f.impressions.push_back(r.str());
      f.enrolled.push_back(BitString::from_bytes(r.raw((k + 7) / 8), k));
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace fpbits

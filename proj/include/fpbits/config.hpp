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

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <type_traits>

#include "fpbits/bit_training.hpp"
#include "fpbits/codebook.hpp"
#include "fpbits/error.hpp"
#include "fpbits/local_structures.hpp"
#include "fpbits/matching.hpp"
#include "fpbits/template_io.hpp"

namespace fpbits {

enum class FusionNorm { PerVector, Corpus };

/// Every tunable of the pipeline. Defaults follow the published parameter
/// table except K, which defaults to a desk-scale 200.
struct PipelineConfig {
  // local structures
  double r_m = 80.0;
  double r_t = 40.0;
  double downscale_area = 10.0;
  double sigma_t0 = 3.0;
  double sigma_t_slope = 0.05;
  double sigma_r0 = 3.0;
  double sigma_r_slope = 0.02;
  // subspace + fusion
  std::size_t n_p = 50;
  double omega_M = 0.6;
  double omega_T = 0.4;
  FusionNorm fusion_norm = FusionNorm::PerVector;
  std::size_t pca_max_samples = 1200;
  // clustering + bit conversion
  std::size_t K = 200;
  std::size_t N_c = 300;
  double tau_s = -0.11;
  std::size_t top_t = 1;
  std::size_t kmeans_max_iters = 100;
  std::size_t augment = 0;
  // bit-training
  double alpha = 0.45;
  double beta = 0.4;
  std::size_t enroll_count = 3;
  MaskMode mask_mode = MaskMode::Both;
  // matching
  std::size_t max_nL = 10;
  std::size_t min_nL = 4;
  double mu_P = 35.0;
  double tau_P = 0.4;
  // randomness
  std::uint64_t seed = 1;

  /// Five clusters per minutia, tau_s = -0.05 (K = 15000 at full scale).
  static PipelineConfig case1() {
    PipelineConfig c;
    c.tau_s = -0.05;
    c.top_t = 5;
    return c;
  }
  /// Single best cluster per minutia, tau_s = -0.11 (K = 4500 at full scale).
  static PipelineConfig case2() { return PipelineConfig{}; }

  StructureGeometry geometry() const { return StructureGeometry::make(r_m, r_t, downscale_area); }
  SpreadModel spread() const { return {sigma_t0, sigma_t_slope, sigma_r0, sigma_r_slope}; }
  CodebookParams codebook_params() const { return {K, N_c, tau_s, top_t}; }
  LgsParams lgs() const { return {min_nL, max_nL, mu_P, tau_P}; }
  BitTrainingParams bit_training() const { return {alpha, beta}; }

  void validate() const {
    spread().validate();
    if (n_p == 0) throw Error(ErrorCode::BadConfig, "n_p must be positive");
    if (K == 0 || N_c == 0 || top_t == 0) throw Error(ErrorCode::BadConfig, "K, N_c and top_t must be positive");
    if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0)) throw Error(ErrorCode::BadConfig, "need 0<alpha<1, beta>0");
    if (min_nL > max_nL || min_nL == 0) throw Error(ErrorCode::BadConfig, "need 0 < min_nL <= max_nL");
    if (omega_M < 0.0 || omega_T < 0.0) throw Error(ErrorCode::BadConfig, "fusion weights must be non-negative");
    if (enroll_count == 0) throw Error(ErrorCode::BadConfig, "enroll_count must be positive");
    if (r_t > r_m) throw Error(ErrorCode::BadConfig, "r_t must not exceed r_m");
  }
};

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "config serialization assumes a 64-bit size_t");

namespace detail {

template <typename Fn>
void for_each_config_field(PipelineConfig& c, Fn&& fn) {
  fn("r_m", c.r_m);
  fn("r_t", c.r_t);
  fn("downscale_area", c.downscale_area);
  fn("sigma_t0", c.sigma_t0);
  fn("sigma_t_slope", c.sigma_t_slope);
  fn("sigma_r0", c.sigma_r0);
  fn("sigma_r_slope", c.sigma_r_slope);
  fn("n_p", c.n_p);
  fn("omega_M", c.omega_M);
  fn("omega_T", c.omega_T);
  fn("fusion_norm", c.fusion_norm);
  fn("pca_max_samples", c.pca_max_samples);
  fn("K", c.K);
  fn("N_c", c.N_c);
  fn("tau_s", c.tau_s);
  fn("top_t", c.top_t);
  fn("kmeans_max_iters", c.kmeans_max_iters);
  fn("augment", c.augment);
  fn("alpha", c.alpha);
  fn("beta", c.beta);
  fn("enroll_count", c.enroll_count);
  fn("mask_mode", c.mask_mode);
  fn("max_nL", c.max_nL);
  fn("min_nL", c.min_nL);
  fn("mu_P", c.mu_P);
  fn("tau_P", c.tau_P);
  fn("seed", c.seed);
}

inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
inline std::string format_value(std::size_t v) { return std::to_string(v); }
inline std::string format_value(FusionNorm v) { return v == FusionNorm::Corpus ? "corpus" : "per_vector"; }
inline std::string format_value(MaskMode v) { return v == MaskMode::Both ? "both" : "enrolled"; }

inline bool parse_value(std::string_view s, double& out) {
  auto v = parse_number<double>(s);
  if (v) out = *v;
  return v.has_value();
}
inline bool parse_value(std::string_view s, std::size_t& out) {
  auto v = parse_number<std::size_t>(s);
  if (v) out = *v;
  return v.has_value();
}
inline bool parse_value(std::string_view s, FusionNorm& out) {
  if (s == "per_vector") out = FusionNorm::PerVector;
  else if (s == "corpus") out = FusionNorm::Corpus;
  else return false;
  return true;
}
inline bool parse_value(std::string_view s, MaskMode& out) {
  if (s == "both") out = MaskMode::Both;
  else if (s == "enrolled") out = MaskMode::EnrolledOnly;
  else return false;
  return true;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// "key = value" lines, one per field, in a fixed order.
inline std::string config_to_text(const PipelineConfig& config) {
  PipelineConfig c = config;
  std::string out;
  detail::for_each_config_field(c, [&](const char* key, auto& value) {
    out += key;
    out += " = ";
    out += detail::format_value(value);
    out += '\n';
  });
  return out;
}

/// Applies "key = value" assignments on top of base. '#' comments and blank
/// lines are ignored; unknown keys and unparseable values are errors.
inline PipelineConfig parse_config(std::string_view text, PipelineConfig base = {}) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::BadConfig, "expected key = value", line_no);
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    bool known = false;
    bool ok = true;
    detail::for_each_config_field(base, [&](const char* name, auto& field) {
      if (key == name) {
        known = true;
        ok = detail::parse_value(value, field);
      }
    });
    if (!known) throw Error(ErrorCode::BadConfig, "unknown key '" + std::string(key) + "'", line_no);
    if (!ok) throw Error(ErrorCode::BadConfig, "bad value for '" + std::string(key) + "'", line_no);
  }
  base.validate();
  return base;
}

}  // namespace fpbits

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
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "fpbits/rng.hpp"
#include "fpbits/template_io.hpp"

namespace fpbits {

/// Noise model for synthetic impressions. Zeroing every noise and transform
/// field makes every impression identical to the subject's master.
struct SynthParams {
  std::size_t n_subjects = 10;
  std::size_t n_impressions = 4;
  int width = 320;
  int height = 320;
  std::size_t n_minutiae = 40;
  double min_separation = 10.0;
  double margin = 16.0;
  double max_rotation_deg = 15.0;
  double max_translation = 20.0;
  double jitter_sigma0 = 1.0;      // px at the image center
  double jitter_sigma_slope = 0.01;  // extra px per px of distance from the center
  double angle_noise = 0.05;       // rad
  double dropout = 0.1;
  double spurious = 0.05;          // expected spurious minutiae per master minutia
  double ridge_frequency = 0.1;    // cycles per px
  double pixel_noise = 20.0;       // gray levels
  std::uint64_t seed = 1;
};

/// Smooth ridge phase field; cos(2 pi phase) is the ridge pattern and the
/// gradient direction of phase is the local ridge normal.
struct RidgeField {
  double frequency = 0.1;
  double base_angle = 0.0;
  std::array<double, 3> amplitude{};  // cycles
  std::array<double, 3> kx{}, ky{}, phase0{};

  double phase(double x, double y) const {
    double p = frequency * (x * std::cos(base_angle) + y * std::sin(base_angle));
    for (std::size_t k = 0; k < amplitude.size(); ++k) p += amplitude[k] * std::sin(kx[k] * x + ky[k] * y + phase0[k]);
    return p;
  }
  double intensity(double x, double y) const { return 128.0 + 90.0 * std::cos(2.0 * std::numbers::pi * phase(x, y)); }
};

/// q = R(angle) (p - center) + center + (tx, ty)
struct RigidTransform {
  double angle = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  void apply(double x, double y, double& qx, double& qy) const {
    const double c = std::cos(angle), s = std::sin(angle);
    qx = c * (x - cx) - s * (y - cy) + cx + tx;
    qy = s * (x - cx) + c * (y - cy) + cy + ty;
  }
  void invert(double qx, double qy, double& x, double& y) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double dx = qx - cx - tx, dy = qy - cy - ty;
    x = c * dx + s * dy + cx;
    y = -s * dx + c * dy + cy;
  }
  Minutia apply(const Minutia& m) const {
    Minutia out = m;
    apply(m.x, m.y, out.x, out.y);
    out.theta = normalize_angle(m.theta + angle);
    return out;
  }
};

struct Sample {
  MinutiaTemplate minutiae;
  GrayImage image;
};

struct SubjectMaster {
  std::vector<Minutia> minutiae;
  RidgeField field;
};

/// Renders field seen through transform (image pixel q shows field at
/// transform^-1(q)) plus Gaussian pixel noise.
inline GrayImage render_ridges(const RidgeField& field, int width, int height, const RigidTransform& transform,
                               double pixel_noise, Rng& rng) {
  GrayImage img{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double px, py;
      transform.invert(x, y, px, py);
      double v = field.intensity(px, py);
      if (pixel_noise > 0.0) v += gaussian(rng, 0.0, pixel_noise);
      img.pixels[static_cast<std::size_t>(y) * width + x] =
          static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return img;
}

inline SubjectMaster make_master(const SynthParams& p, std::size_t subject) {
  Rng rng = make_rng(p.seed, {subject, 0xa11ce});
  SubjectMaster m;
  const double lo_x = p.margin, hi_x = p.width - 1 - p.margin;
  const double lo_y = p.margin, hi_y = p.height - 1 - p.margin;
  const double min_sep2 = p.min_separation * p.min_separation;
  std::size_t attempts = 0;
  while (m.minutiae.size() < p.n_minutiae && attempts < 100000) {
    ++attempts;
    Minutia c;
    c.x = uniform(rng, lo_x, hi_x);
    c.y = uniform(rng, lo_y, hi_y);
    c.theta = uniform(rng, 0.0, kTwoPi);
    c.kind = uniform(rng, 0.0, 1.0) < 0.5 ? MinutiaKind::Termination : MinutiaKind::Bifurcation;
    c.quality = 60 + static_cast<int>(uniform_index(rng, 41));
    bool ok = true;
    for (const auto& o : m.minutiae) {
      if ((o.x - c.x) * (o.x - c.x) + (o.y - c.y) * (o.y - c.y) < min_sep2) {
        ok = false;
        break;
      }
    }
    if (ok) m.minutiae.push_back(c);
  }
  m.field.frequency = p.ridge_frequency;
  m.field.base_angle = uniform(rng, 0.0, std::numbers::pi);
  for (std::size_t k = 0; k < m.field.amplitude.size(); ++k) {
    const double wavelength = uniform(rng, 150.0, 300.0);
    const double dir = uniform(rng, 0.0, kTwoPi);
    m.field.amplitude[k] = uniform(rng, 0.5, 1.5);
    m.field.kx[k] = kTwoPi / wavelength * std::cos(dir);
    m.field.ky[k] = kTwoPi / wavelength * std::sin(dir);
    m.field.phase0[k] = uniform(rng, 0.0, kTwoPi);
  }
  return m;
}

inline std::string subject_name(std::size_t subject) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%03zu", subject + 1);
  return buf;
}

/// One impression (0-based index) of a subject.
inline Sample make_impression(const SynthParams& p, const SubjectMaster& master, std::size_t subject,
                              std::size_t impression) {
  Rng rng = make_rng(p.seed, {subject, impression, 0x1e55});
  RigidTransform t;
  t.cx = 0.5 * (p.width - 1);
  t.cy = 0.5 * (p.height - 1);
  t.angle = uniform(rng, -1.0, 1.0) * p.max_rotation_deg * std::numbers::pi / 180.0;
  t.tx = uniform(rng, -1.0, 1.0) * p.max_translation;
  t.ty = uniform(rng, -1.0, 1.0) * p.max_translation;

  Sample s;
  s.minutiae.width = p.width;
  s.minutiae.height = p.height;
  s.minutiae.resolution = 197.0;
  s.minutiae.subject_id = subject_name(subject);
  s.minutiae.impression_id = std::to_string(impression + 1);
  auto keep = [&](const Minutia& m) {
    if (m.x >= 0.0 && m.y >= 0.0 && m.x < p.width && m.y < p.height) s.minutiae.minutiae.push_back(m);
  };
  for (const Minutia& src : master.minutiae) {
    // Draw every random quantity unconditionally so one minutia's fate does
    // not shift the stream for the rest.
    const bool drop = uniform(rng, 0.0, 1.0) < p.dropout;
    const double n1 = gaussian(rng), n2 = gaussian(rng), n3 = gaussian(rng);
    Minutia m = t.apply(src);
    const double r = std::hypot(src.x - t.cx, src.y - t.cy);
    const double sigma = p.jitter_sigma0 + p.jitter_sigma_slope * r;
    m.x += sigma * n1;
    m.y += sigma * n2;
    m.theta = normalize_angle(m.theta + p.angle_noise * n3);
    if (!drop) keep(m);
  }
  const std::size_t extra_trials = master.minutiae.size();
  for (std::size_t i = 0; i < extra_trials; ++i) {
    const bool add = uniform(rng, 0.0, 1.0) < p.spurious;
    Minutia m;
    m.x = uniform(rng, p.margin, p.width - 1 - p.margin);
    m.y = uniform(rng, p.margin, p.height - 1 - p.margin);
    m.theta = uniform(rng, 0.0, kTwoPi);
    m.kind = MinutiaKind::Other;
    m.quality = 40;
    if (add) keep(m);
  }
  s.image = render_ridges(master.field, p.width, p.height, t, p.pixel_noise, rng);
  return s;
}

/// Subjects in order, impressions in order within each subject.
inline std::vector<Sample> synth_dataset(const SynthParams& p) {
  std::vector<Sample> out;
  out.reserve(p.n_subjects * p.n_impressions);
  for (std::size_t s = 0; s < p.n_subjects; ++s) {
    const SubjectMaster master = make_master(p, s);
    for (std::size_t i = 0; i < p.n_impressions; ++i) out.push_back(make_impression(p, master, s, i));
  }
  return out;
}

}  // namespace fpbits

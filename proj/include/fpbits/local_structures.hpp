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
#include <numbers>
#include <span>
#include <vector>

#include "fpbits/error.hpp"
#include "fpbits/template_io.hpp"

namespace fpbits {

struct LatticePoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

/// Integer lattice points with x^2 + y^2 <= radius^2, ordered by y then x.
inline std::vector<LatticePoint> disc_lattice(double radius) {
  std::vector<LatticePoint> pts;
  // Slack keeps boundary points when radius^2 is an integer, e.g. 80/sqrt(10).
  const double r2 = radius * radius * (1.0 + 1e-12);
  const int r = static_cast<int>(std::floor(std::sqrt(r2)));
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      if (static_cast<double>(x * x + y * y) <= r2) pts.push_back({x, y});
    }
  }
  return pts;
}

/// Radii and rasterization lattices shared by every structure in a run.
/// The MBLS lattice lives in downscaled coordinates: positions are divided
/// by sqrt(downscale_area) before rasterization.
struct StructureGeometry {
  double r_m = 80.0;
  double r_t = 40.0;
  double downscale_area = 10.0;
  std::vector<LatticePoint> lattice_m;
  std::vector<LatticePoint> lattice_t;

  double mbls_scale() const { return 1.0 / std::sqrt(downscale_area); }
  std::size_t n_m() const { return lattice_m.size(); }
  std::size_t n_t() const { return lattice_t.size(); }

  static StructureGeometry make(double r_m, double r_t, double downscale_area) {
    if (!(r_m > 0.0) || !(r_t > 0.0) || !(downscale_area >= 1.0)) {
      throw Error(ErrorCode::BadConfig, "radii must be positive and downscale_area >= 1");
    }
    StructureGeometry g;
    g.r_m = r_m;
    g.r_t = r_t;
    g.downscale_area = downscale_area;
    g.lattice_m = disc_lattice(r_m / std::sqrt(downscale_area));
    g.lattice_t = disc_lattice(r_t);
    return g;
  }
};

/// Anisotropic neighbor spread, linear in the distance rho from the
/// reference minutia (pixels, before downscaling). The tangential spread
/// grows at least as fast as the radial one.
struct SpreadModel {
  double sigma_t0 = 3.0;
  double sigma_t_slope = 0.05;
  double sigma_r0 = 3.0;
  double sigma_r_slope = 0.02;

  double tangential(double rho) const { return sigma_t0 + sigma_t_slope * rho; }
  double radial(double rho) const { return sigma_r0 + sigma_r_slope * rho; }

  void validate() const {
    if (!(sigma_t0 > 0 && sigma_t_slope > 0 && sigma_r0 > 0 && sigma_r_slope > 0)) {
      throw Error(ErrorCode::BadConfig, "spread parameters must be positive");
    }
    if (sigma_t_slope < sigma_r_slope) {
      throw Error(ErrorCode::BadConfig, "sigma_t_slope must be >= sigma_r_slope");
    }
  }
};

struct LocalPoint {
  double u = 0.0;
  double v = 0.0;
  double rho = 0.0;
};

/// Expresses neighbor in the frame centered at ref and rotated by -ref.theta.
inline LocalPoint local_frame(const Minutia& ref, const Minutia& neighbor) {
  const double dx = neighbor.x - ref.x;
  const double dy = neighbor.y - ref.y;
  const double c = std::cos(ref.theta);
  const double s = std::sin(ref.theta);
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return {u, v, std::hypot(u, v)};
}

/// Elliptical 2D Gaussian exp(-(a dx^2 + 2b dx dy + c dy^2)) with sigma_x
/// along direction theta_i and sigma_y across it.
inline double gaussian_response(double zx, double zy, double mu_x, double mu_y, double sigma_x,
                                double sigma_y, double theta_i) {
  const double cs = std::cos(theta_i);
  const double sn = std::sin(theta_i);
  const double s2 = std::sin(2.0 * theta_i);
  const double ix = 1.0 / (sigma_x * sigma_x);
  const double iy = 1.0 / (sigma_y * sigma_y);
  const double a = 0.5 * (cs * cs * ix + sn * sn * iy);
  const double b = 0.25 * s2 * (ix - iy);
  const double c = 0.5 * (sn * sn * ix + cs * cs * iy);
  const double dx = zx - mu_x;
  const double dy = zy - mu_y;
  return std::exp(-(a * dx * dx + 2.0 * b * dx * dy + c * dy * dy));
}

struct MblsVector {
  std::vector<double> values;
};

struct TblsVector {
  std::vector<double> values;
};

/// Neighbors of all[ref_index] inside r_m, in the reference's local frame.
inline std::vector<LocalPoint> mbls_neighbors(std::span<const Minutia> all, std::size_t ref_index, double r_m) {
  std::vector<LocalPoint> out;
  const Minutia& ref = all[ref_index];
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i == ref_index) continue;
    const LocalPoint p = local_frame(ref, all[i]);
    if (p.rho <= r_m) out.push_back(p);
  }
  return out;
}

/// Unnormalized mixture: sum of one Gaussian per neighbor, evaluated on the
/// downscaled MBLS lattice. Neighbor positions and spreads are scaled by the
/// same factor as the lattice.
inline std::vector<double> mbls_mixture(std::span<const LocalPoint> neighbors, const StructureGeometry& geom,
                                        const SpreadModel& spread) {
  const std::size_t n = geom.lattice_m.size();
  std::vector<double> sum(n, 0.0);
  const double scale = geom.mbls_scale();
  for (const LocalPoint& p : neighbors) {
    const double mx = p.u * scale;
    const double my = p.v * scale;
    const double sx = spread.tangential(p.rho) * scale;
    const double sy = spread.radial(p.rho) * scale;
    // Major axis tangential to the circle through the neighbor.
    const double orientation = std::atan2(p.v, p.u) + 0.5 * std::numbers::pi;
    const double cs = std::cos(orientation);
    const double sn = std::sin(orientation);
    const double ix = 1.0 / (sx * sx);
    const double iy = 1.0 / (sy * sy);
    const double a = 0.5 * (cs * cs * ix + sn * sn * iy);
    const double b = 0.25 * std::sin(2.0 * orientation) * (ix - iy);
    const double c = 0.5 * (sn * sn * ix + cs * cs * iy);
    for (std::size_t k = 0; k < n; ++k) {
      const double dx = geom.lattice_m[k].x - mx;
      const double dy = geom.lattice_m[k].y - my;
      sum[k] += std::exp(-(a * dx * dx + 2.0 * b * dx * dy + c * dy * dy));
    }
  }
  return sum;
}

inline void normalize_l2(std::vector<double>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  if (ss <= 0.0) return;
  const double inv = 1.0 / std::sqrt(ss);
  for (double& x : v) x *= inv;
}

/// Minutia-based local structure of all[ref_index]: the L2-normalized
/// Gaussian mixture of its neighbors. No neighbors gives the zero vector.
inline MblsVector build_mbls(std::span<const Minutia> all, std::size_t ref_index, const StructureGeometry& geom,
                             const SpreadModel& spread) {
  const auto neighbors = mbls_neighbors(all, ref_index, geom.r_m);
  MblsVector out{mbls_mixture(neighbors, geom, spread)};
  normalize_l2(out.values);
  return out;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "euclidean_distance");
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

inline double mbls_distance(const MblsVector& p1, const MblsVector& p2) {
  return euclidean_distance(p1.values, p2.values);
}

// ---------------------------------------------------------------------------
// Texture
// ---------------------------------------------------------------------------

struct RealImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Affine intensity map giving the image the target global mean and
/// (population) standard deviation. Constant images map to target_mean.
inline RealImage normalize_image(const GrayImage& img, double target_mean = 0.0, double target_std = 1.0) {
  if (img.pixels.empty()) throw Error(ErrorCode::EmptyImage, "cannot normalize an empty image");
  require_same_length(img.pixels.size(), static_cast<std::size_t>(img.width) * img.height, "normalize_image");
  const double n = static_cast<double>(img.pixels.size());
  double mean = 0.0;
  for (auto p : img.pixels) mean += p;
  mean /= n;
  double var = 0.0;
  for (auto p : img.pixels) var += (p - mean) * (p - mean);
  const double sd = std::sqrt(var / n);

  RealImage out{img.width, img.height, std::vector<double>(img.pixels.size(), target_mean)};
  if (sd > 0.0) {
    const double gain = target_std / sd;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = target_mean + (img.pixels[i] - mean) * gain;
  }
  return out;
}

/// Bilinear sample; positions outside [0, w-1] x [0, h-1] return fill.
inline double sample_bilinear(const RealImage& img, double x, double y, double fill) {
  if (!(x >= 0.0) || !(y >= 0.0) || x > img.width - 1 || y > img.height - 1) return fill;
  const int x0 = std::min(static_cast<int>(x), img.width - 1);
  const int y0 = std::min(static_cast<int>(y), img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
  const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

/// Texture patch around ref, rotated into its local frame: lattice offset
/// (u, v) is read from ref + R(theta) (u, v).
inline TblsVector extract_tbls(const Minutia& ref, const RealImage& img, const StructureGeometry& geom,
                               double fill = 0.0) {
  TblsVector out;
  out.values.resize(geom.lattice_t.size());
  const double c = std::cos(ref.theta);
  const double s = std::sin(ref.theta);
  for (std::size_t k = 0; k < geom.lattice_t.size(); ++k) {
    const double u = geom.lattice_t[k].x;
    const double v = geom.lattice_t[k].y;
    out.values[k] = sample_bilinear(img, ref.x + c * u - s * v, ref.y + s * u + c * v, fill);
  }
  return out;
}

}  // namespace fpbits

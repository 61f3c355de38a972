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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fpbits/error.hpp"

namespace fpbits {

/// PCA subspace: y = basis^T (x - mean). basis is n x n_p with orthonormal
/// columns ordered by decreasing explained variance.
struct PcaModel {
  std::vector<double> mean;
  Eigen::MatrixXd basis;
  std::vector<double> explained_variance;  // sample covariance eigenvalues (1/(N-1))

  std::size_t input_dim() const { return mean.size(); }
  std::size_t output_dim() const { return static_cast<std::size_t>(basis.cols()); }
};

namespace detail {

// Flip each column so that its largest-magnitude entry is positive
// (first such entry on ties), making persisted models reproducible.
inline void fix_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      const double a = std::abs(basis(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (basis(best, j) < 0.0) basis.col(j) *= -1.0;
  }
}

}  // namespace detail

/// Relative eigenvalue floor below which a direction counts as absent.
inline constexpr double kRankTolerance = 1e-10;

/// Top-n_p principal subspace of the samples. When there are fewer samples
/// than dimensions the eigenproblem is solved on the N x N Gram matrix and
/// lifted back, so the D x D covariance is never formed.
inline PcaModel train_pca(std::span<const std::vector<double>> samples, std::size_t n_p) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "PCA needs at least 2 samples, got " + std::to_string(n));
  const std::size_t dim = samples[0].size();
  for (const auto& s : samples) require_same_length(s.size(), dim, "train_pca sample");
  if (n_p == 0 || n_p > std::min(n - 1, dim)) {
    throw Error(ErrorCode::RankDeficient, "n_p=" + std::to_string(n_p) + " exceeds min(samples-1, dim)=" +
                                              std::to_string(std::min(n - 1, dim)));
  }

  PcaModel model;
  model.mean.assign(dim, 0.0);
  for (const auto& s : samples) {
    for (std::size_t j = 0; j < dim; ++j) model.mean[j] += s[j];
  }
  for (double& m : model.mean) m /= static_cast<double>(n);

  Eigen::MatrixXd centered(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = samples[i][j] - model.mean[j];
    }
  }
  const double denom = static_cast<double>(n - 1);
  const auto k = static_cast<Eigen::Index>(n_p);

  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;
  const bool gram = n < dim;
  if (gram) {
    Eigen::MatrixXd g = (centered * centered.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
    eigenvalues = solver.eigenvalues();
    eigenvectors = solver.eigenvectors();
  } else {
    Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    eigenvalues = solver.eigenvalues();
    eigenvectors = solver.eigenvectors();
  }

  const Eigen::Index total = eigenvalues.size();
  const double largest = eigenvalues(total - 1);
  const double kth = eigenvalues(total - k);
  if (!(largest > 0.0) || kth <= kRankTolerance * largest) {
    throw Error(ErrorCode::RankDeficient, "samples span fewer than " + std::to_string(n_p) + " directions");
  }

  model.basis.resize(static_cast<Eigen::Index>(dim), k);
  model.explained_variance.resize(n_p);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::Index src = total - 1 - c;
    const double lambda = eigenvalues(src);
    model.explained_variance[static_cast<std::size_t>(c)] = lambda;
    if (gram) {
      // v = Xc^T u / sqrt((N-1) lambda) is a unit eigenvector of the covariance.
      model.basis.col(c) = centered.transpose() * eigenvectors.col(src) / std::sqrt(denom * lambda);
    } else {
      model.basis.col(c) = eigenvectors.col(src);
    }
  }
  detail::fix_signs(model.basis);
  return model;
}

inline std::vector<double> project(const PcaModel& model, std::span<const double> x) {
  require_same_length(x.size(), model.input_dim(), "project");
  const auto dim = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd centered(dim);
  for (Eigen::Index i = 0; i < dim; ++i) centered(i) = x[static_cast<std::size_t>(i)] - model.mean[static_cast<std::size_t>(i)];
  const Eigen::VectorXd y = model.basis.transpose() * centered;
  return {y.data(), y.data() + y.size()};
}

/// (v - mean(v)) / std(v) with the population standard deviation. A
/// zero-variance input yields the zero vector.
inline std::vector<double> znorm(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.0);
  if (v.empty()) return out;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.size()));
  if (!(sd > 0.0)) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
  return out;
}

struct FusedSource {
  std::string subject_id;
  std::string impression_id;
  std::size_t minutia_index = 0;
};

/// Per-minutia descriptor [omega_M * f'_min, omega_T * f'_text].
struct FusedVector {
  std::vector<double> values;
  FusedSource source;
};

/// Concatenates already-normalized blocks with their weights.
inline FusedVector concat_weighted(std::span<const double> f_min, std::span<const double> f_text, double omega_m,
                                   double omega_t) {
  require_same_length(f_min.size(), f_text.size(), "fuse");
  FusedVector out;
  out.values.reserve(f_min.size() * 2);
  for (double x : f_min) out.values.push_back(omega_m * x);
  for (double x : f_text) out.values.push_back(omega_t * x);
  return out;
}

inline FusedVector fuse(std::span<const double> f_min, std::span<const double> f_text, double omega_m = 0.6,
                        double omega_t = 0.4) {
  require_same_length(f_min.size(), f_text.size(), "fuse");
  const auto a = znorm(f_min);
  const auto b = znorm(f_text);
  return concat_weighted(a, b, omega_m, omega_t);
}

/// Per-component corpus statistics; the alternative to per-vector z-scoring.
struct ComponentStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  static ComponentStats fit(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw Error(ErrorCode::TooFewSamples, "no rows for component statistics");
    const std::size_t d = rows[0].size();
    ComponentStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (const auto& r : rows) {
      require_same_length(r.size(), d, "ComponentStats::fit");
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
    }
    for (double& m : s.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < d; ++j) s.stddev[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    }
    for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(rows.size()));
    return s;
  }

  std::vector<double> apply(std::span<const double> v) const {
    require_same_length(v.size(), mean.size(), "ComponentStats::apply");
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (stddev[j] > 0.0) out[j] = (v[j] - mean[j]) / stddev[j];
    }
    return out;
  }
};

}  // namespace fpbits

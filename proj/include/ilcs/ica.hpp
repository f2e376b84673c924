/*
 * Copyright (C) 2026 The iLCS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ilcs/rng.hpp"

namespace ilcs {

/// Latent dimension estimate from the eigenvalues of a sample covariance.
struct RankEstimate {
  int d_hat = 0;
  Eigen::VectorXd eigenvalues;  // descending, nonnegative (clamped)
  double relative_threshold = 1e-6;
};

struct WhiteningTransform {
  Eigen::VectorXd center;        // length p
  Eigen::MatrixXd w_white;       // d x p, Lambda^{-1/2} U_d^T
  Eigen::VectorXd eigenvalues;   // retained, descending
  Eigen::MatrixXd eigenvectors;  // p x d, matching columns

  Eigen::MatrixXd apply(const Eigen::MatrixXd& samples) const {
    return (samples.rowwise() - center.transpose()) * w_white.transpose();
  }
};

struct FastIcaOptions {
  double tol = 1e-6;
  int max_iter = 500;
  int restarts = 3;
  std::uint64_t rng_seed = 0;
};

/// FastICA output: unmixing rows are scaled so the recovered sources have
/// unit variance, leaving only the permutation and sign ambiguities.
struct IcaResult {
  Eigen::MatrixXd unmixing;  // d x p
  Eigen::MatrixXd sources;   // n x d, equals (X - center) * unmixing^T
  Eigen::VectorXd center;    // length p
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // per-iteration row misalignment
};

namespace detail {

inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& samples) {
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
}

/// Descending eigenvalues/eigenvectors of a symmetric matrix.
inline void symmetric_eigs_descending(const Eigen::MatrixXd& sym, Eigen::VectorXd& values,
                                      Eigen::MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("symmetric eigendecomposition failed");
  values = eig.eigenvalues().reverse();
  vectors = eig.eigenvectors().rowwise().reverse();
}

/// W <- (W W^T)^{-1/2} W
inline Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  symmetric_eigs_descending(w * w.transpose(), values, vectors);
  if (values(values.size() - 1) <= 1e-14 * values(0))
    throw std::runtime_error("FastICA: decorrelation became singular");
  return vectors * values.cwiseSqrt().cwiseInverse().asDiagonal() * vectors.transpose() * w;
}

/// Seeded random orthogonal matrix via QR of a Gaussian draw, with the sign
/// of R's diagonal fixed so the result is unique.
inline Eigen::MatrixXd random_orthogonal(int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

// E[log cosh(nu)] for nu ~ N(0,1); reference point of the logcosh contrast.
inline constexpr double kGaussianLogCosh = 0.37456722;

}  // namespace detail

/// Estimates the latent dimension as the number of covariance eigenvalues
/// above relative_threshold times the largest one.
inline RankEstimate estimate_latent_dim(const Eigen::MatrixXd& samples,
                                        double relative_threshold = 1e-6) {
  if (samples.rows() < 2)
    throw std::invalid_argument("estimate_latent_dim: need at least 2 samples");
  RankEstimate est;
  est.relative_threshold = relative_threshold;
  Eigen::MatrixXd vectors;
  detail::symmetric_eigs_descending(detail::sample_covariance(samples), est.eigenvalues, vectors);
  est.eigenvalues = est.eigenvalues.cwiseMax(0.0);
  const double lambda_max = est.eigenvalues(0);
  int d_hat = 0;
  if (lambda_max > 0.0) {
    for (int i = 0; i < est.eigenvalues.size(); ++i)
      if (est.eigenvalues(i) > relative_threshold * lambda_max) ++d_hat;
  }
  const int cap = static_cast<int>(std::min<Eigen::Index>(samples.rows() - 1, samples.cols()));
  est.d_hat = std::min(d_hat, cap);
  return est;
}

/// Projects centered data onto the top-d covariance eigenvectors scaled by
/// inverse square-root eigenvalues.
inline WhiteningTransform fit_whitening(const Eigen::MatrixXd& samples, int d) {
  if (samples.rows() < 2) throw std::invalid_argument("fit_whitening: need at least 2 samples");
  if (d < 1 || d > samples.cols())
    throw std::invalid_argument("fit_whitening: d out of range");
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  detail::symmetric_eigs_descending(detail::sample_covariance(samples), values, vectors);

  const double floor = 1e-12 * std::max(values(0), 0.0);
  if (!(values(d - 1) > floor)) {
    std::ostringstream msg;
    msg << "fit_whitening: requested d=" << d << " exceeds numerical rank; eigenvalues:";
    for (int i = 0; i < values.size(); ++i) msg << " " << values(i);
    throw std::invalid_argument(msg.str());
  }

  WhiteningTransform w;
  w.center = samples.colwise().mean();
  w.eigenvalues = values.head(d).cwiseMax(floor);
  w.eigenvectors = vectors.leftCols(d);
  w.w_white = w.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * w.eigenvectors.transpose();
  return w;
}

/// Symmetric (parallel) fixed-point FastICA with the logcosh contrast.
/// Each restart starts from a seeded random rotation; the restart with the
/// largest total contrast wins, preferring converged ones. Convergence is
/// min_i |<w_i_new, w_i_old>| >= 1 - tol.
inline IcaResult run_fastica(const Eigen::MatrixXd& samples, int d,
                             const FastIcaOptions& options = {}) {
  if (d < 1) throw std::invalid_argument("run_fastica: d must be >= 1");
  if (!samples.allFinite())
    throw std::invalid_argument("run_fastica: data contains non-finite values");

  const WhiteningTransform whitening = fit_whitening(samples, d);
  const Eigen::MatrixXd y = whitening.apply(samples);  // n x d
  const double n = static_cast<double>(y.rows());

  Eigen::MatrixXd best_rotation;
  double best_contrast = -1.0;
  bool best_converged = false;
  int best_iterations = 0;
  std::vector<double> best_trace;

  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    Eigen::MatrixXd w =
        detail::random_orthogonal(d, derive_stream(options.rng_seed, restart));
    std::vector<double> trace;
    bool converged = false;
    int iter = 0;
    for (; iter < options.max_iter; ++iter) {
      const Eigen::MatrixXd s = y * w.transpose();        // n x d
      const Eigen::ArrayXXd g = s.array().tanh();         // g(s)
      const Eigen::VectorXd g_prime_mean =                // E[1 - g^2] per column
          (1.0 - g.square()).colwise().mean();
      Eigen::MatrixXd w_next =
          (g.matrix().transpose() * y) / n - g_prime_mean.asDiagonal() * w;
      w_next = detail::symmetric_decorrelation(w_next);

      const double delta =
          1.0 - (w_next * w.transpose()).diagonal().cwiseAbs().minCoeff();
      trace.push_back(delta);
      w = w_next;
      if (delta <= options.tol) {
        converged = true;
        ++iter;
        break;
      }
    }

    const Eigen::MatrixXd s = y * w.transpose();
    double contrast = 0.0;
    for (int i = 0; i < d; ++i) {
      // log cosh(x) = |x| + log1p(exp(-2|x|)) - log 2, overflow-free
      const Eigen::ArrayXd a = s.col(i).array().abs();
      const double mean_logcosh = (a + (-2.0 * a).exp().log1p()).mean() - std::log(2.0);
      contrast += std::abs(mean_logcosh - detail::kGaussianLogCosh);
    }

    const bool better = (converged && !best_converged) ||
                        (converged == best_converged && contrast > best_contrast);
    if (better) {
      best_rotation = w;
      best_contrast = contrast;
      best_converged = converged;
      best_iterations = iter;
      best_trace = std::move(trace);
    }
  }

  IcaResult result;
  result.unmixing = best_rotation * whitening.w_white;
  result.center = whitening.center;
  result.sources =
      (samples.rowwise() - whitening.center.transpose()) * result.unmixing.transpose();
  result.iterations = best_iterations;
  result.converged = best_converged;
  result.objective_trace = std::move(best_trace);
  return result;
}

/// Amari index of M_est * M_true^{-1}, normalized to [0, 1]; zero iff the
/// product is a scaled permutation.
inline double amari_distance(const Eigen::MatrixXd& m_est, const Eigen::MatrixXd& m_true) {
  if (m_est.rows() != m_est.cols() || m_true.rows() != m_true.cols() ||
      m_est.rows() != m_true.rows())
    throw std::invalid_argument("amari_distance: matrices must be square with equal d");
  const int d = static_cast<int>(m_est.rows());
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(m_true);
  if (!lu.isInvertible()) throw std::invalid_argument("amari_distance: M_true is singular");
  if (d == 1) return 0.0;
  const Eigen::MatrixXd p = (m_est * lu.inverse()).cwiseAbs();
  double total = 0.0;
  for (int i = 0; i < d; ++i) total += p.row(i).sum() / p.row(i).maxCoeff() - 1.0;
  for (int j = 0; j < d; ++j) total += p.col(j).sum() / p.col(j).maxCoeff() - 1.0;
  return total / (2.0 * d * (d - 1));
}

}  // namespace ilcs

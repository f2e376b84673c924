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

#include <catch2/catch_amalgamated.hpp>

#include "ilcs/ica.hpp"
#include "ilcs/scm.hpp"
#include "testutil.hpp"

using namespace ilcs;

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index n, int p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("estimate_latent_dim: full-rank Gaussian sample") {
  const Eigen::MatrixXd x = gaussian_matrix(10000, 5, 1);
  CHECK(estimate_latent_dim(x).d_hat == 5);
}

TEST_CASE("estimate_latent_dim: noiseless mixing has rank d") {
  // oracle: eigenvalues of G Cov(Z) G^T — exactly 4 positive, 6 zero
  Rng rng(2);
  Eigen::MatrixXd g(10, 4);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = rng.uniform(-0.25, 0.25);
  const Eigen::MatrixXd z = gaussian_matrix(20000, 4, 3);
  const Eigen::MatrixXd pop = g * g.transpose();  // Cov(Z) = I
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pop);
  int oracle_rank = 0;
  for (int i = 0; i < 10; ++i)
    if (eig.eigenvalues()(i) > 1e-12 * eig.eigenvalues()(9)) ++oracle_rank;
  REQUIRE(oracle_rank == 4);

  const RankEstimate est = estimate_latent_dim(z * g.transpose());
  CHECK(est.d_hat == 4);
  for (int i = 4; i < 10; ++i) CHECK(est.eigenvalues(i) < 1e-10 * est.eigenvalues(0));
}

TEST_CASE("estimate_latent_dim: p = 2d setting") {
  const LatentScm base = sample_scm_params(generate_dag(5, GraphFamily::kErdosRenyi, 2.0, 4), 5);
  const MixingMap mixing = generate_mixing(10, 5, 6);
  const EnvironmentSpec spec{base, base, {}};
  const EnvironmentDataset data = simulate_environment(spec, mixing, NoiseSpec::defaults(5), 10000, 7);
  CHECK(estimate_latent_dim(data.samples).d_hat == 5);
}

TEST_CASE("estimate_latent_dim: rejects n < 2") {
  CHECK_THROWS_AS(estimate_latent_dim(Eigen::MatrixXd::Zero(1, 3)), std::invalid_argument);
}

TEST_CASE("fit_whitening: whitened covariance is the identity") {
  const LatentScm base = sample_scm_params(generate_dag(5, GraphFamily::kErdosRenyi, 2.0, 8), 9);
  const MixingMap mixing = generate_mixing(10, 5, 10);
  const EnvironmentSpec spec{base, base, {}};
  const EnvironmentDataset data =
      simulate_environment(spec, mixing, NoiseSpec::defaults(5), 100000, 11);

  const WhiteningTransform w = fit_whitening(data.samples, 5);
  const Eigen::MatrixXd y = w.apply(data.samples);
  const Eigen::MatrixXd cov = detail::sample_covariance(y);
  CHECK((cov - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-6);

  // condition number of the whitened covariance
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  CHECK(eig.eigenvalues()(4) / eig.eigenvalues()(0) > 1.0 / (1.0 + 1e-3));

  // whitening already-white data is an orthogonal map
  const WhiteningTransform w2 = fit_whitening(y, 5);
  CHECK((w2.w_white * w2.w_white.transpose() - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-6);
}

TEST_CASE("fit_whitening: requested d beyond numerical rank is rejected") {
  Rng rng(12);
  Eigen::MatrixXd g(6, 2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
  const Eigen::MatrixXd x = gaussian_matrix(500, 2, 13) * g.transpose();  // rank 2
  CHECK_THROWS_WITH(fit_whitening(x, 4), Catch::Matchers::ContainsSubstring("eigenvalues"));
}

TEST_CASE("run_fastica: nothing to unmix beyond the ambiguity") {
  // independent, white, non-Gaussian sources observed directly
  NoiseSpec spec;
  spec.shapes = {0.6, 1.0, 1.5};
  const Eigen::MatrixXd x = sample_noise(spec, 100000, 14);
  const IcaResult result = run_fastica(x, 3, {.rng_seed = 15});
  REQUIRE(result.converged);

  // unmixing should be a signed permutation of the identity within 1e-2
  Eigen::MatrixXd q = result.unmixing;
  for (int i = 0; i < 3; ++i) {
    int arg = 0;
    q.row(i).cwiseAbs().maxCoeff(&arg);
    for (int j = 0; j < 3; ++j) {
      const double target = (j == arg) ? 1.0 : 0.0;
      CHECK(std::abs(std::abs(q(i, j)) - target) < 1e-2);
    }
  }
}

TEST_CASE("run_fastica: two known sources, Amari distance below 0.05") {
  const Eigen::Index n = 100000;
  Rng rng(16);
  Eigen::MatrixXd s(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i, 0) = rng.generalized_normal(1.0);                     // Laplace
    s(i, 1) = rng.uniform(-std::sqrt(3.0), std::sqrt(3.0));    // uniform, unit variance
  }
  Eigen::MatrixXd mix(2, 2);
  mix << 1.0, 0.4, -0.3, 0.8;
  const Eigen::MatrixXd x = s * mix.transpose();

  const IcaResult result = run_fastica(x, 2, {.rng_seed = 17});
  REQUIRE(result.converged);

  const Eigen::MatrixXd q = result.unmixing * mix;
  // independent oracle: Amari formula re-derived in testutil + pattern check
  CHECK(testutil::amari_index_formula(q) < 0.05);
  CHECK(testutil::near_signed_permutation(q, 0.9, 0.1));
  // library distance agrees with the oracle formula
  CHECK(amari_distance(result.unmixing, mix.inverse()) ==
        Catch::Approx(testutil::amari_index_formula(q)).margin(1e-12));
}

TEST_CASE("run_fastica: composite model M*G*B^-1 is a signed permutation") {
  const LatentScm base = sample_scm_params(generate_dag(5, GraphFamily::kErdosRenyi, 2.0, 18), 19);
  const MixingMap mixing = generate_mixing(10, 5, 20);
  const EnvironmentSpec spec{base, base, {}};
  const EnvironmentDataset data =
      simulate_environment(spec, mixing, NoiseSpec::defaults(5), 100000, 21);

  const IcaResult result = run_fastica(data.samples, 5, {.rng_seed = 22});
  REQUIRE(result.converged);

  const Eigen::MatrixXd b_inv =
      base.scm_matrix().partialPivLu().solve(Eigen::MatrixXd::Identity(5, 5));
  const Eigen::MatrixXd q = result.unmixing * mixing.G * b_inv;
  CHECK(testutil::near_signed_permutation(q, 0.9, 0.1));
}

TEST_CASE("run_fastica: source columns are standardized") {
  const LatentScm base = sample_scm_params(generate_dag(4, GraphFamily::kScaleFree, 2.0, 23), 24);
  const MixingMap mixing = generate_mixing(8, 4, 25);
  const EnvironmentSpec spec{base, base, {}};
  const Eigen::Index n = 50000;
  const EnvironmentDataset data = simulate_environment(spec, mixing, NoiseSpec::defaults(4), n, 26);
  const IcaResult result = run_fastica(data.samples, 4, {.rng_seed = 27});

  for (int j = 0; j < 4; ++j) {
    const double mean = result.sources.col(j).mean();
    const double var = (result.sources.col(j).array() - mean).square().sum() / double(n - 1);
    CHECK(std::abs(mean) < 1e-3);
    CHECK(std::abs(var - 1.0) < 1e-3);
  }

  // sources are exactly the unmixing applied to centered data
  const Eigen::MatrixXd centered = data.samples.rowwise() - result.center.transpose();
  CHECK((result.sources - centered * result.unmixing.transpose()).norm() == 0.0);
}

TEST_CASE("run_fastica: deterministic given seed, equivariant to scaling") {
  const LatentScm base = sample_scm_params(generate_dag(3, GraphFamily::kErdosRenyi, 1.0, 28), 29);
  const MixingMap mixing = generate_mixing(6, 3, 30);
  const EnvironmentSpec spec{base, base, {}};
  const EnvironmentDataset data =
      simulate_environment(spec, mixing, NoiseSpec::defaults(3), 20000, 31);

  const FastIcaOptions options{.rng_seed = 32};
  const IcaResult a = run_fastica(data.samples, 3, options);
  const IcaResult b = run_fastica(data.samples, 3, options);
  CHECK(a.unmixing == b.unmixing);
  CHECK(a.sources == b.sources);

  const double c = 4.0;
  const IcaResult scaled = run_fastica(c * data.samples, 3, options);
  CHECK((scaled.unmixing - a.unmixing / c).norm() < 1e-6 * a.unmixing.norm());
  CHECK((scaled.sources - a.sources).norm() < 1e-6 * a.sources.norm());
}

TEST_CASE("run_fastica: input validation and non-convergence flag") {
  const Eigen::MatrixXd x = gaussian_matrix(100, 3, 33);
  CHECK_THROWS_AS(run_fastica(x, 0), std::invalid_argument);

  Eigen::MatrixXd bad = x;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(run_fastica(bad, 2), std::invalid_argument);

  NoiseSpec spec;
  spec.shapes = {0.6, 1.0, 1.5};
  const Eigen::MatrixXd src = sample_noise(spec, 5000, 34);
  const IcaResult result = run_fastica(src, 3, {.tol = 1e-16, .max_iter = 1, .restarts = 1});
  CHECK_FALSE(result.converged);
  CHECK(result.objective_trace.size() == 1);
}

TEST_CASE("amari_distance: zero on scaled signed permutations") {
  Eigen::MatrixXd m(3, 3);
  m << 1.0, 2.0, 0.5, -1.0, 0.3, 0.7, 0.2, -0.4, 1.5;
  CHECK(amari_distance(m, m) < 1e-12);

  Eigen::MatrixXd sp = Eigen::MatrixXd::Zero(3, 3);
  sp(0, 2) = -2.0;
  sp(1, 0) = 1.0;
  sp(2, 1) = 3.0;
  CHECK(amari_distance(sp * m, m) < 1e-12);
}

TEST_CASE("amari_distance: perturbed matrix matches the oracle formula") {
  Eigen::MatrixXd m(3, 3);
  m << 1.0, 0.1, -0.2, 0.0, 1.2, 0.3, 0.4, -0.1, 0.9;
  Rng rng(35);
  Eigen::MatrixXd perturbation(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) perturbation(i, j) = rng.normal();
  const Eigen::MatrixXd est = m + 0.1 * perturbation;

  const double expected = testutil::amari_index_formula(est * m.inverse());
  const double got = amari_distance(est, m);
  CHECK(got > 0.0);
  CHECK(got == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("amari_distance: singular reference is rejected") {
  Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(2, 2);
  CHECK_THROWS_AS(amari_distance(Eigen::MatrixXd::Identity(2, 2), singular),
                  std::invalid_argument);
}

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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ilcs {

/// SplitMix64 (Steele, Lea & Flood, "Fast splittable pseudorandom number
/// generators"). Counter-based: output i for a given seed is
/// mix(seed + (i+1)*kGamma), so any stream can be replayed or split without
/// shared state. All samplers below are built on it by hand so that a seed
/// produces the same byte stream on every platform and standard library.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += kGamma;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t state_;
};

/// Derives an independent child seed from (seed, stream). Used to give each
/// environment / restart / purpose its own stream of one master seed.
inline constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  return SplitMix64::mix(seed ^ SplitMix64::mix(stream + 0x9E3779B97F4A7C15ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  /// Random sign, +1 or -1 with equal probability.
  double sign() { return (engine_() & 1u) ? 1.0 : -1.0; }

  /// Standard normal via Box-Muller (two uniforms per draw, no cached state).
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Gamma(shape, 1) via Marsaglia-Tsang, with the shape<1 boost
  /// Gamma(a) = Gamma(a+1) * U^{1/a}.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = 1.0 - uniform01();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = 1.0 - uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Zero-mean, unit-variance generalized normal with shape beta
  /// (density ~ exp(-|x/s|^beta)). Uses |X/s|^beta ~ Gamma(1/beta, 1) and the
  /// variance identity Var = s^2 Gamma(3/beta)/Gamma(1/beta).
  double generalized_normal(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("generalized_normal: shape must be positive");
    const double s = generalized_normal_scale(beta);
    const double t = gamma(1.0 / beta);
    return sign() * s * std::pow(t, 1.0 / beta);
  }

  /// Scale making the generalized normal with shape beta unit-variance.
  static double generalized_normal_scale(double beta) {
    return std::sqrt(std::tgamma(1.0 / beta) / std::tgamma(3.0 / beta));
  }

  /// Fisher-Yates shuffle of [0, n); returns the permutation.
  std::vector<int> permutation(int n) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    return perm;
  }

 private:
  SplitMix64 engine_;
};

}  // namespace ilcs

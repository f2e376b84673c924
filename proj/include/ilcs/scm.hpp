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
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ilcs/rng.hpp"

namespace ilcs {

enum class GraphFamily { kErdosRenyi, kScaleFree };

inline std::string to_string(GraphFamily f) {
  return f == GraphFamily::kErdosRenyi ? "ER" : "SF";
}

inline GraphFamily graph_family_from_string(const std::string& s) {
  if (s == "ER" || s == "er") return GraphFamily::kErdosRenyi;
  if (s == "SF" || s == "sf") return GraphFamily::kScaleFree;
  throw std::invalid_argument("unknown graph family: " + s);
}

/// One environment's latent linear SCM. Row i of `adjacency` holds the edge
/// weights of node i's parents: adjacency(i, j) != 0 iff edge j -> i.
struct LatentScm {
  int d = 0;
  Eigen::MatrixXd adjacency;          // d x d, zero diagonal, DAG
  Eigen::VectorXd omega;              // noise variances, strictly positive
  std::vector<int> topological_order; // parents precede children

  /// B = Omega^{-1/2} (I - A). Diagonal entries are Omega_ii^{-1/2} > 0.
  Eigen::MatrixXd scm_matrix() const {
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(d, d) - adjacency;
    for (int i = 0; i < d; ++i) b.row(i) /= std::sqrt(omega(i));
    return b;
  }

  void validate() const;
};

/// Per-component generalized-normal shapes of the shared noise vector.
/// Components are standardized to zero mean and unit variance.
struct NoiseSpec {
  std::vector<double> shapes;

  int d() const { return static_cast<int>(shapes.size()); }

  /// Shapes descending from 1.8 to 0.6 so psi(y) = P(|y| <= 1) is strictly
  /// increasing in the component index. All shapes are below 2 (non-Gaussian)
  /// and pairwise distinct.
  static NoiseSpec defaults(int d) {
    if (d < 1) throw std::invalid_argument("NoiseSpec::defaults: d must be >= 1");
    NoiseSpec spec;
    spec.shapes.resize(d);
    if (d == 1) {
      spec.shapes[0] = 1.2;
    } else {
      for (int i = 0; i < d; ++i)
        spec.shapes[i] = 1.8 - 1.2 * static_cast<double>(i) / (d - 1);
    }
    return spec;
  }

  void validate() const {
    if (shapes.empty()) throw std::invalid_argument("NoiseSpec: no shapes");
    int gaussians = 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      if (!(shapes[i] > 0.0))
        throw std::invalid_argument("NoiseSpec: shapes must be positive");
      if (shapes[i] == 2.0) ++gaussians;
      for (std::size_t j = i + 1; j < shapes.size(); ++j)
        if (shapes[i] == shapes[j])
          throw std::invalid_argument("NoiseSpec: shapes must be pairwise distinct");
    }
    if (gaussians > 1)
      throw std::invalid_argument("NoiseSpec: at most one component may be Gaussian");
  }
};

/// Shared linear mixing X = G Z; identical across environments.
struct MixingMap {
  Eigen::MatrixXd G;  // p x d, full column rank
  int p() const { return static_cast<int>(G.rows()); }
  int d() const { return static_cast<int>(G.cols()); }
};

/// Hand-specified structural change applied on top of a soft intervention;
/// used to realize general interventions (added/removed/reversed edges).
struct StructuralEdit {
  enum class Kind { kAddEdge, kRemoveEdge, kReverseEdge, kSetWeight };
  Kind kind;
  int from = 0;  // parent
  int to = 0;    // child
  std::optional<double> weight;  // for kAddEdge / kSetWeight
};

struct InterventionOptions {
  /// false: resample only the entries that are nonzero in the base row.
  /// true: resample the whole row over the base topological predecessors
  /// (the only full-row rewrite that cannot create a cycle).
  bool full_row = false;
  std::vector<StructuralEdit> edits;
};

/// Base SCM plus its intervened version for one environment, with the
/// ground-truth shifted set (0-based node indices, ascending).
struct EnvironmentSpec {
  LatentScm base;
  LatentScm intervened;
  std::vector<int> shifted_nodes;
};

struct EnvironmentDataset {
  Eigen::MatrixXd samples;  // n x p, one observation per row
  std::string env_id;
  std::uint64_t seed = 0;
  Eigen::Index n() const { return samples.rows(); }
  int p() const { return static_cast<int>(samples.cols()); }
};

namespace detail {

/// Kahn's algorithm; empty result means the graph has a cycle.
inline std::optional<std::vector<int>> kahn_order(const Eigen::MatrixXd& adjacency) {
  const int d = static_cast<int>(adjacency.rows());
  std::vector<int> indegree(d, 0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (adjacency(i, j) != 0.0) ++indegree[i];
  std::vector<int> ready;
  for (int i = 0; i < d; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::vector<int> order;
  order.reserve(d);
  while (!ready.empty()) {
    // smallest-index-first keeps the order deterministic
    const auto it = std::min_element(ready.begin(), ready.end());
    const int v = *it;
    ready.erase(it);
    order.push_back(v);
    for (int i = 0; i < d; ++i) {
      if (adjacency(i, v) != 0.0 && --indegree[i] == 0) ready.push_back(i);
    }
  }
  if (static_cast<int>(order.size()) != d) return std::nullopt;
  return order;
}

}  // namespace detail

inline void LatentScm::validate() const {
  if (d < 1) throw std::invalid_argument("LatentScm: d must be >= 1");
  if (adjacency.rows() != d || adjacency.cols() != d)
    throw std::invalid_argument("LatentScm: adjacency must be d x d");
  if (omega.size() != d) throw std::invalid_argument("LatentScm: omega must have length d");
  for (int i = 0; i < d; ++i) {
    if (adjacency(i, i) != 0.0)
      throw std::invalid_argument("LatentScm: adjacency diagonal must be zero");
    if (!(omega(i) > 0.0))
      throw std::invalid_argument("LatentScm: omega must be strictly positive");
  }
  if (!detail::kahn_order(adjacency)) throw std::invalid_argument("LatentScm: graph has a cycle");
  if (static_cast<int>(topological_order.size()) != d)
    throw std::invalid_argument("LatentScm: topological_order must have length d");
  std::vector<int> pos(d, -1);
  for (int r = 0; r < d; ++r) {
    const int v = topological_order[r];
    if (v < 0 || v >= d || pos[v] != -1)
      throw std::invalid_argument("LatentScm: topological_order is not a permutation");
    pos[v] = r;
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (adjacency(i, j) != 0.0 && pos[j] >= pos[i])
        throw std::invalid_argument("LatentScm: topological_order violates an edge");
}

/// Random DAG skeleton (edge indicators, unit omega placeholder).
/// ER: a random node order, then each order-respecting pair is an edge with
/// probability 2m/(d-1), giving an expected edge count of m*d.
/// SF: Barabasi-Albert preferential attachment with m edges per new node,
/// every edge oriented from the earlier-attached to the later-attached node;
/// node labels are shuffled afterwards.
inline LatentScm generate_dag(int d, GraphFamily family, double m, std::uint64_t rng_seed) {
  if (d < 1) throw std::invalid_argument("generate_dag: d must be >= 1");
  if (m < 0.0) throw std::invalid_argument("generate_dag: m must be >= 0");
  Rng rng(rng_seed);

  LatentScm scm;
  scm.d = d;
  scm.adjacency = Eigen::MatrixXd::Zero(d, d);
  scm.omega = Eigen::VectorXd::Ones(d);

  if (d == 1) {
    scm.topological_order = {0};
    return scm;
  }

  if (family == GraphFamily::kErdosRenyi) {
    const double p_edge = 2.0 * m / (d - 1);
    if (p_edge > 1.0)
      throw std::invalid_argument("generate_dag: ER density infeasible (2m/(d-1) = " +
                                  std::to_string(p_edge) + " > 1)");
    const std::vector<int> order = rng.permutation(d);
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        if (rng.uniform01() < p_edge) scm.adjacency(order[b], order[a]) = 1.0;
    scm.topological_order = order;
  } else {
    const int mm = std::min(std::max(1, static_cast<int>(std::lround(m))), d - 1);
    // attachment order 0..d-1; labels shuffled at the end
    std::vector<std::pair<int, int>> edges;  // (earlier, later)
    std::vector<int> repeated;               // degree-weighted node pool
    std::vector<int> targets;
    for (int t = 0; t < mm; ++t) targets.push_back(t);
    for (int v = mm; v < d; ++v) {
      for (int u : targets) {
        edges.emplace_back(u, v);
        repeated.push_back(u);
        repeated.push_back(v);
      }
      if (v + 1 >= d) break;
      targets.clear();
      while (static_cast<int>(targets.size()) < mm) {
        const int pick = repeated[rng.uniform_int(repeated.size())];
        if (std::find(targets.begin(), targets.end(), pick) == targets.end())
          targets.push_back(pick);
      }
    }
    const std::vector<int> label = rng.permutation(d);
    for (const auto& [u, v] : edges) scm.adjacency(label[v], label[u]) = 1.0;
    scm.topological_order.resize(d);
    for (int r = 0; r < d; ++r) scm.topological_order[r] = label[r];
  }
  scm.validate();
  return scm;
}

/// Fills a skeleton with weights from Unif(+-[0.25, 1]) and noise variances
/// from Unif[2, 4].
inline LatentScm sample_scm_params(const LatentScm& skeleton, std::uint64_t rng_seed) {
  skeleton.validate();
  Rng rng(rng_seed);
  LatentScm scm = skeleton;
  for (int i = 0; i < scm.d; ++i)
    for (int j = 0; j < scm.d; ++j)
      if (scm.adjacency(i, j) != 0.0)
        scm.adjacency(i, j) = rng.sign() * rng.uniform(0.25, 1.0);
  for (int i = 0; i < scm.d; ++i) scm.omega(i) = rng.uniform(2.0, 4.0);
  return scm;
}

/// General intervention: ceil(shift_fraction * d) nodes (at least 1 when the
/// fraction is positive) get their parent weights and noise variance
/// resampled from Unif[6, 8]; optional structural edits are applied on top.
/// The recorded shifted set is computed from the rows that actually changed.
inline EnvironmentSpec apply_general_intervention(const LatentScm& base, double shift_fraction,
                                                  std::uint64_t rng_seed,
                                                  const InterventionOptions& options = {}) {
  base.validate();
  if (shift_fraction < 0.0 || shift_fraction > 1.0)
    throw std::invalid_argument("apply_general_intervention: shift_fraction must be in [0, 1]");
  Rng rng(rng_seed);
  const int d = base.d;

  EnvironmentSpec spec;
  spec.base = base;
  spec.intervened = base;

  int count = 0;
  if (shift_fraction > 0.0)
    count = std::max(1, static_cast<int>(std::ceil(shift_fraction * d)));

  std::vector<int> selected;
  {
    std::vector<int> perm = rng.permutation(d);
    selected.assign(perm.begin(), perm.begin() + count);
    std::sort(selected.begin(), selected.end());
  }

  std::vector<int> base_pos(d);
  for (int r = 0; r < d; ++r) base_pos[base.topological_order[r]] = r;

  for (int i : selected) {
    if (options.full_row) {
      // new parents limited to topological predecessors so the graph stays acyclic
      for (int j = 0; j < d; ++j) {
        if (j != i && base_pos[j] < base_pos[i])
          spec.intervened.adjacency(i, j) = rng.uniform(6.0, 8.0);
      }
    } else {
      for (int j = 0; j < d; ++j)
        if (base.adjacency(i, j) != 0.0) spec.intervened.adjacency(i, j) = rng.uniform(6.0, 8.0);
    }
    spec.intervened.omega(i) = rng.uniform(6.0, 8.0);
  }

  for (const auto& edit : options.edits) {
    auto& a = spec.intervened.adjacency;
    if (edit.from < 0 || edit.from >= d || edit.to < 0 || edit.to >= d || edit.from == edit.to)
      throw std::invalid_argument("apply_general_intervention: bad edit endpoints");
    switch (edit.kind) {
      case StructuralEdit::Kind::kAddEdge:
        if (a(edit.to, edit.from) != 0.0)
          throw std::invalid_argument("apply_general_intervention: edge to add already exists");
        a(edit.to, edit.from) =
            edit.weight ? *edit.weight : rng.sign() * rng.uniform(0.25, 1.0);
        break;
      case StructuralEdit::Kind::kRemoveEdge:
        if (a(edit.to, edit.from) == 0.0)
          throw std::invalid_argument("apply_general_intervention: edge to remove is absent");
        a(edit.to, edit.from) = 0.0;
        break;
      case StructuralEdit::Kind::kReverseEdge: {
        if (a(edit.to, edit.from) == 0.0)
          throw std::invalid_argument("apply_general_intervention: edge to reverse is absent");
        const double w = a(edit.to, edit.from);
        a(edit.to, edit.from) = 0.0;
        a(edit.from, edit.to) = w;
        break;
      }
      case StructuralEdit::Kind::kSetWeight:
        if (a(edit.to, edit.from) == 0.0)
          throw std::invalid_argument("apply_general_intervention: edge to reweight is absent");
        a(edit.to, edit.from) = edit.weight ? *edit.weight : rng.sign() * rng.uniform(0.25, 1.0);
        break;
    }
  }

  const auto order = detail::kahn_order(spec.intervened.adjacency);
  if (!order) {
    std::ostringstream msg;
    msg << "apply_general_intervention: structural edits create a cycle (";
    for (const auto& e : options.edits) msg << e.from << "->" << e.to << " ";
    msg << ")";
    throw std::invalid_argument(msg.str());
  }
  spec.intervened.topological_order = *order;
  spec.intervened.validate();

  for (int i = 0; i < d; ++i) {
    const bool row_changed = (spec.intervened.adjacency.row(i) != base.adjacency.row(i)) ||
                             (spec.intervened.omega(i) != base.omega(i));
    if (row_changed) spec.shifted_nodes.push_back(i);
  }
  return spec;
}

/// n x d matrix of independent generalized-normal noise, column i with shape
/// spec.shapes[i], zero mean and unit variance.
inline Eigen::MatrixXd sample_noise(const NoiseSpec& spec, Eigen::Index n, std::uint64_t rng_seed) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("sample_noise: n must be >= 1");
  Rng rng(rng_seed);
  Eigen::MatrixXd eps(n, spec.d());
  for (int j = 0; j < spec.d(); ++j)
    for (Eigen::Index r = 0; r < n; ++r) eps(r, j) = rng.generalized_normal(spec.shapes[j]);
  return eps;
}

/// p x d mixing with entries Unif[-0.25, 0.25], resampled until full column
/// rank. `identity` gives G = I for the fully observed setting (requires p == d).
inline MixingMap generate_mixing(int p, int d, std::uint64_t rng_seed, bool identity = false) {
  if (d < 1 || p < d) throw std::invalid_argument("generate_mixing: need p >= d >= 1");
  if (identity) {
    if (p != d) throw std::invalid_argument("generate_mixing: identity mixing requires p == d");
    return MixingMap{Eigen::MatrixXd::Identity(p, d)};
  }
  Rng rng(rng_seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXd g(p, d);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = rng.uniform(-0.25, 0.25);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
    if (svd.singularValues()(d - 1) > 1e-10 * svd.singularValues()(0)) return MixingMap{g};
  }
  throw std::runtime_error("generate_mixing: failed to draw a full-rank mixing in 100 tries");
}

/// Solves Z = A Z + Omega^{1/2} eps by forward substitution along the
/// topological order (B is triangular up to a permutation; no dense inverse).
inline Eigen::MatrixXd latents_from_noise(const LatentScm& scm, const Eigen::MatrixXd& eps) {
  if (eps.cols() != scm.d)
    throw std::invalid_argument("latents_from_noise: noise has wrong dimension");
  Eigen::MatrixXd z(eps.rows(), scm.d);
  for (int i : scm.topological_order) {
    z.col(i) = std::sqrt(scm.omega(i)) * eps.col(i);
    for (int j = 0; j < scm.d; ++j)
      if (scm.adjacency(i, j) != 0.0) z.col(i) += scm.adjacency(i, j) * z.col(j);
  }
  return z;
}

/// Draws X = G B^{-1} eps for one environment.
inline EnvironmentDataset simulate_environment(const EnvironmentSpec& spec, const MixingMap& mixing,
                                               const NoiseSpec& noise, Eigen::Index n,
                                               std::uint64_t rng_seed) {
  if (mixing.d() != spec.intervened.d || noise.d() != spec.intervened.d)
    throw std::invalid_argument("simulate_environment: inconsistent dimensions");
  const Eigen::MatrixXd eps = sample_noise(noise, n, rng_seed);
  const Eigen::MatrixXd z = latents_from_noise(spec.intervened, eps);
  EnvironmentDataset dataset;
  dataset.samples = z * mixing.G.transpose();
  dataset.seed = rng_seed;
  return dataset;
}

}  // namespace ilcs

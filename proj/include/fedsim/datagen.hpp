#pragma once

// Synthetic data generators and the heterogeneous Dirichlet partition.
// All draws come from per-(node, purpose) streams so a node's data does not
// depend on how many other nodes exist or in which order they are filled.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace detail {

inline Vec draw_normal_vec(Rng& r, std::size_t n, double sigma2) {
  Vec v(n);
  const double sd = std::sqrt(sigma2);
  for (std::size_t i = 0; i < n; ++i) v[i] = r.normal(0.0, sd);
  return v;
}

inline Matrix draw_feature_matrix(Rng& r, std::size_t n, std::size_t d, double sigma2) {
  Matrix X(n, d);
  const double sd = std::sqrt(sigma2);
  for (std::size_t i = 0; i < n * d; ++i) X.a[i] = r.normal(0.0, sd);
  return X;
}

inline double sign_label(double v) { return v >= 0.0 ? 1.0 : -1.0; }  // sign(0) := +1

}  // namespace detail

// Linear regression data: shared w* ~ N(0, sigma2_wstar I); per node
// X_i ~ N(0, sigma2_x), y_i = X_i w* + z_i with z_i ~ N(0, sigma2_noise).
inline FederatedDataset gen_regression(const GenConfig& cfg) {
  FederatedDataset fed;
  fed.task = Task::regression;
  fed.dim = cfg.dim;
  Rng truth_rng(cfg.seed, 0, Stream::ground_truth);
  const Vec w_star = detail::draw_normal_vec(truth_rng, cfg.dim, cfg.sigma2_wstar);
  fed.nodes.resize(cfg.nodes);
  for (std::size_t i = 0; i < cfg.nodes; ++i) {
    NodeDataset& nd = fed.nodes[i];
    Rng xr(cfg.seed, i + 1, Stream::features);
    nd.X = detail::draw_feature_matrix(xr, cfg.samples_per_node, cfg.dim, cfg.sigma2_x);
    nd.y = matvec(nd.X, w_star);
    Rng zr(cfg.seed, i + 1, Stream::noise);
    const double sd = std::sqrt(cfg.sigma2_noise);
    for (double& v : nd.y) v += zr.normal(0.0, sd);
    nd.w_star = w_star;
  }
  return fed;
}

// Binary classification data: shared w* plus per-node perturbation,
// w_i* = w* + z_i with z_i ~ N(0, sigma2_noise I); labels y = sign(X w_i*).
inline FederatedDataset gen_classification(const GenConfig& cfg) {
  FederatedDataset fed;
  fed.task = Task::classification;
  fed.dim = cfg.dim;
  Rng truth_rng(cfg.seed, 0, Stream::ground_truth);
  const Vec w_star = detail::draw_normal_vec(truth_rng, cfg.dim, cfg.sigma2_wstar);
  fed.nodes.resize(cfg.nodes);
  for (std::size_t i = 0; i < cfg.nodes; ++i) {
    NodeDataset& nd = fed.nodes[i];
    Rng pr(cfg.seed, i + 1, Stream::ground_truth);
    nd.w_star = w_star;
    axpy(1.0, detail::draw_normal_vec(pr, cfg.dim, cfg.sigma2_noise), nd.w_star);
    Rng xr(cfg.seed, i + 1, Stream::features);
    nd.X = detail::draw_feature_matrix(xr, cfg.samples_per_node, cfg.dim, cfg.sigma2_x);
    Vec m = matvec(nd.X, nd.w_star);
    nd.y.resize(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) nd.y[j] = detail::sign_label(m[j]);
  }
  return fed;
}

// Fresh evaluation data drawn from the same distribution (streams disjoint
// from training ones). Labels use each node's own ground truth.
inline FederatedDataset gen_test_like(const FederatedDataset& train, const GenConfig& cfg,
                                      std::size_t samples_per_node) {
  if (!train.has_truth()) throw MissingTruthError("gen_test_like: dataset has no ground truth");
  FederatedDataset fed;
  fed.task = train.task;
  fed.dim = train.dim;
  fed.nodes.resize(train.node_count());
  for (std::size_t i = 0; i < train.node_count(); ++i) {
    NodeDataset& nd = fed.nodes[i];
    nd.w_star = train.nodes[i].w_star;
    Rng xr(cfg.seed, i + 1, Stream::test_features);
    nd.X = detail::draw_feature_matrix(xr, samples_per_node, fed.dim, cfg.sigma2_x);
    Vec m = matvec(nd.X, nd.w_star);
    nd.y.resize(m.size());
    if (fed.task == Task::classification) {
      for (std::size_t j = 0; j < m.size(); ++j) nd.y[j] = detail::sign_label(m[j]);
    } else {
      nd.y = m;
    }
  }
  return fed;
}

// Heterogeneous split of a pooled labeled dataset: for each class, node
// shares are drawn from Dir(alpha * 1_M) and that class's samples are
// assigned multinomially. Throws EmptyNodeError if a node ends up empty
// (caller may retry with another seed).
inline FederatedDataset dirichlet_partition(const NodeDataset& pool, std::size_t nodes,
                                            double alpha, std::uint64_t seed) {
  if (nodes == 0) throw ConfigError("dirichlet_partition: nodes must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("dirichlet_partition: alpha must be > 0");
  FederatedDataset fed;
  fed.task = Task::classification;
  fed.dim = pool.dim();
  fed.nodes.resize(nodes);

  // Distinct label values, in first-appearance order.
  std::vector<double> classes;
  for (double v : pool.y)
    if (std::find(classes.begin(), classes.end(), v) == classes.end()) classes.push_back(v);

  std::vector<std::vector<std::size_t>> member(nodes);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    Rng rng(seed, c, Stream::dirichlet);
    Vec p(nodes);
    double total = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      p[i] = rng.gamma(alpha);
      total += p[i];
    }
    if (total <= 0.0) throw ConfigError("dirichlet_partition: degenerate proportions");
    Vec cum(nodes);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      acc += p[i] / total;
      cum[i] = acc;
    }
    cum[nodes - 1] = 1.0;
    for (std::size_t s = 0; s < pool.y.size(); ++s) {
      if (pool.y[s] != classes[c]) continue;
      const double u = rng.uniform01();
      const std::size_t node =
          std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
      member[std::min(node, nodes - 1)].push_back(s);
    }
  }

  for (std::size_t i = 0; i < nodes; ++i) {
    if (member[i].empty())
      throw EmptyNodeError("dirichlet_partition: node " + std::to_string(i) +
                           " received zero samples");
    NodeDataset& nd = fed.nodes[i];
    nd.X = Matrix(member[i].size(), pool.dim());
    nd.y.resize(member[i].size());
    for (std::size_t r = 0; r < member[i].size(); ++r) {
      const std::size_t s = member[i][r];
      for (std::size_t j = 0; j < pool.dim(); ++j) nd.X(r, j) = pool.X(s, j);
      nd.y[r] = pool.y[s];
    }
    nd.w_star = pool.w_star;
  }
  return fed;
}

}  // namespace fedsim

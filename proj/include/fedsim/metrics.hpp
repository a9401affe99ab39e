#pragma once

// Comparison metrics between trained models and baselines.

#include <cmath>
#include <optional>

#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/linalg.hpp"

namespace fedsim {

// ||w1 - w2|| / d. The dimension normalization matches how regression
// curves are reported across dimension sweeps.
inline double scaled_diff(const Vec& w1, const Vec& w2) {
  if (w1.size() != w2.size()) throw DimensionError("scaled_diff: size mismatch");
  if (w1.empty()) throw DimensionError("scaled_diff: empty vectors");
  return norm2(sub(w1, w2)) / static_cast<double>(w1.size());
}

// || w1/||w1|| - w2/||w2|| ||, in [0, 2]. Exponential-loss models grow
// without bound, so only directions are comparable.
inline double directional_diff(const Vec& w1, const Vec& w2) {
  if (w1.size() != w2.size()) throw DimensionError("directional_diff: size mismatch");
  const double n1 = norm2(w1), n2 = norm2(w2);
  if (n1 <= 1e-300 || n2 <= 1e-300)
    throw ZeroVectorError("directional_diff: zero vector has no direction");
  double s = 0.0;
  for (std::size_t i = 0; i < w1.size(); ++i) {
    const double diff = w1[i] / n1 - w2[i] / n2;
    s += diff * diff;
  }
  return std::sqrt(s);
}

// (1/(M d)) sum_i ||w - w_i*||^2 against each node's ground truth.
inline double generalization_error(const Vec& w, const FederatedDataset& fed) {
  if (!fed.has_truth()) throw MissingTruthError("generalization_error: no ground truth");
  if (w.size() != fed.dim) throw DimensionError("generalization_error: size mismatch");
  double s = 0.0;
  for (const auto& node : fed.nodes)
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double diff = w[i] - node.w_star[i];
      s += diff * diff;
    }
  return s / (static_cast<double>(fed.node_count()) * static_cast<double>(fed.dim));
}

// Fraction of samples with sign(x^T w) == y, pooled over nodes; sign(0) = +1.
inline double accuracy(const Vec& w, const FederatedDataset& fed) {
  if (w.size() != fed.dim) throw DimensionError("accuracy: size mismatch");
  std::size_t total = 0, correct = 0;
  for (const auto& node : fed.nodes) {
    const Vec m = matvec(node.X, w);
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double pred = m[j] >= 0.0 ? 1.0 : -1.0;
      correct += pred == node.y[j] ? 1 : 0;
    }
    total += m.size();
  }
  if (total == 0) throw EmptyNodeError("accuracy: no samples");
  return static_cast<double>(correct) / static_cast<double>(total);
}

// One row of a model-vs-model comparison; optional fields stay unset when the
// dataset lacks ground truth, the task has no accuracy notion, or a margin
// set is not provided.
struct ComparisonReport {
  double scaled = 0.0;
  double directional = 0.0;
  std::optional<double> gen_error;
  std::optional<double> acc;
};

inline ComparisonReport compare_models(const Vec& w, const Vec& reference,
                                       const FederatedDataset* eval_data = nullptr) {
  ComparisonReport rep;
  rep.scaled = scaled_diff(w, reference);
  rep.directional = directional_diff(w, reference);
  if (eval_data) {
    if (eval_data->has_truth()) rep.gen_error = generalization_error(w, *eval_data);
    if (eval_data->task == Task::classification) rep.acc = accuracy(w, *eval_data);
  }
  return rep;
}

}  // namespace fedsim

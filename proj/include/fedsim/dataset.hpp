#pragma once

// Dataset containers shared by every module. A node holds its local sample
// matrix (one sample per row) and labels; ground-truth weights are kept when
// the data is synthetic so generalization error can be measured.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/linalg.hpp"

namespace fedsim {

enum class Task : std::uint8_t { regression = 0, classification = 1 };

struct NodeDataset {
  Matrix X;       // n_i x d
  Vec y;          // n_i labels (real for regression, +/-1 for classification)
  Vec w_star;     // ground-truth weights, empty when unknown
  std::size_t samples() const { return X.rows; }
  std::size_t dim() const { return X.cols; }
};

struct FederatedDataset {
  std::vector<NodeDataset> nodes;
  std::size_t dim = 0;
  Task task = Task::regression;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t total_samples() const {
    std::size_t n = 0;
    for (const auto& nd : nodes) n += nd.samples();
    return n;
  }
  bool has_truth() const {
    if (nodes.empty()) return false;
    for (const auto& nd : nodes)
      if (nd.w_star.size() != dim) return false;
    return true;
  }
};

struct GenConfig {
  std::size_t nodes = 10;
  std::size_t samples_per_node = 50;
  std::size_t dim = 1500;
  double sigma2_wstar = 4.0;   // variance of the shared w* entries
  double sigma2_x = 1.0;       // feature variance
  double sigma2_noise = 0.04;  // regression: label noise; classification: w_i* spread
  std::uint64_t seed = 42;
};

// Pools all nodes into one dataset (ground truth kept only if every node
// shares the same w_star).
inline NodeDataset stack_nodes(const FederatedDataset& fed) {
  NodeDataset out;
  out.X = Matrix(fed.total_samples(), fed.dim);
  out.y.reserve(out.X.rows);
  std::size_t r = 0;
  for (const auto& nd : fed.nodes) {
    for (std::size_t i = 0; i < nd.samples(); ++i, ++r)
      for (std::size_t j = 0; j < fed.dim; ++j) out.X(r, j) = nd.X(i, j);
    out.y.insert(out.y.end(), nd.y.begin(), nd.y.end());
  }
  bool same_truth = fed.has_truth();
  for (std::size_t i = 1; same_truth && i < fed.nodes.size(); ++i)
    same_truth = fed.nodes[i].w_star == fed.nodes[0].w_star;
  if (same_truth && !fed.nodes.empty()) out.w_star = fed.nodes[0].w_star;
  return out;
}

}  // namespace fedsim

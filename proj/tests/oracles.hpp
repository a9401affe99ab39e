#pragma once

// Independent reference implementations used only by tests. These must not
// share code with the paths they check: the projection oracle enumerates
// active sets and solves small equality-constrained systems by Gaussian
// elimination, and the gradient oracle uses central differences.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/linalg.hpp"
#include "fedsim/loss.hpp"

namespace oracles {

using fedsim::Matrix;
using fedsim::Vec;

// Dense symmetric solve via Gaussian elimination with partial pivoting.
// Returns nullopt when the system is singular.
inline std::optional<Vec> solve_dense(Matrix a, Vec b) {
  const std::size_t n = a.rows;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
    if (std::fabs(a(piv, col)) < 1e-12) return std::nullopt;
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

struct OracleProjection {
  bool feasible = false;
  Vec w;
  Vec beta;  // dense over all constraints, zero off the active set
};

// Exact projection of w0 onto {w : A w >= 1} by enumerating candidate
// active sets S, solving the equality-constrained projection
//   beta_S = (A_S A_S^T)^{-1} (1 - A_S w0),  w = w0 + A_S^T beta_S,
// and accepting the KKT point (beta_S >= 0, all margins >= 1). Exponential
// in the constraint count; intended for m <= 12.
inline OracleProjection project_enumerate(const Vec& w0, const Matrix& A) {
  const std::size_t m = A.rows;
  const std::size_t d = A.cols;
  OracleProjection best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::size_t> S;
    for (std::size_t j = 0; j < m; ++j)
      if (mask & (std::size_t{1} << j)) S.push_back(j);
    Vec w = w0;
    Vec beta(m, 0.0);
    if (!S.empty()) {
      Matrix gram(S.size(), S.size());
      Vec rhs(S.size());
      for (std::size_t p = 0; p < S.size(); ++p) {
        double margin = 0.0;
        for (std::size_t k = 0; k < d; ++k) margin += A(S[p], k) * w0[k];
        rhs[p] = 1.0 - margin;
        for (std::size_t q = 0; q < S.size(); ++q) {
          double g = 0.0;
          for (std::size_t k = 0; k < d; ++k) g += A(S[p], k) * A(S[q], k);
          gram(p, q) = g;
        }
      }
      auto bs = solve_dense(gram, rhs);
      if (!bs) continue;
      bool nonneg = true;
      for (double b : *bs) nonneg = nonneg && b >= -1e-10;
      if (!nonneg) continue;
      for (std::size_t p = 0; p < S.size(); ++p) {
        beta[S[p]] = std::max(0.0, (*bs)[p]);
        for (std::size_t k = 0; k < d; ++k) w[k] += (*bs)[p] * A(S[p], k);
      }
    }
    bool feas = true;
    for (std::size_t j = 0; j < m && feas; ++j) {
      double margin = 0.0;
      for (std::size_t k = 0; k < d; ++k) margin += A(j, k) * w[k];
      feas = margin >= 1.0 - 1e-8;
    }
    if (!feas) continue;
    double dist = 0.0;
    for (std::size_t k = 0; k < d; ++k) dist += (w[k] - w0[k]) * (w[k] - w0[k]);
    if (dist < best_dist) {
      best_dist = dist;
      best.feasible = true;
      best.w = w;
      best.beta = beta;
    }
  }
  return best;
}

// Central-difference gradient of a loss.
inline Vec fd_gradient(const fedsim::LossSpec& spec, const fedsim::NodeDataset& node,
                       const Vec& w, double h = 1e-6) {
  Vec g(w.size());
  Vec wp = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    wp[i] = w[i] + h;
    const double fp = fedsim::loss_value(spec, node, wp).value;
    wp[i] = w[i] - h;
    const double fm = fedsim::loss_value(spec, node, wp).value;
    wp[i] = w[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace oracles

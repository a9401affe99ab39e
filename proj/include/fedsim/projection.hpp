#pragma once

// Euclidean projection onto an intersection of margin half-spaces
//   C = { w : a_j^T w >= 1, j = 1..m },   a_j = y_j x_j,
// solved in the dual by cyclic coordinate ascent:
//   beta_j <- max(0, beta_j + (1 - a_j^T w) / ||a_j||^2),  w = w0 + A^T beta.
// Margins are maintained incrementally through the constraint Gram matrix
// Q = A A^T (O(m) per coordinate), and a converged result is only returned
// after the KKT certificate is re-validated on freshly recomputed margins.
// When ascent stalls near the optimum (ill conditioning, rounding floor),
// the current support is solved directly through a Cholesky of the Gram
// slice and certified the same way.
// The hard-margin SVM is the special case w0 = 0 on the stacked constraints.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/linalg.hpp"

namespace fedsim {

struct MarginSet {
  Matrix A;         // m x d, rows are label-folded samples y_j x_j
  Vec row_sqnorm;   // ||a_j||^2
  Matrix gram;      // Q = A A^T

  MarginSet() = default;
  explicit MarginSet(Matrix rows) : A(std::move(rows)) { build_cache(); }

  static MarginSet from_node(const NodeDataset& node) {
    Matrix A(node.samples(), node.dim());
    for (std::size_t i = 0; i < node.samples(); ++i) {
      const double* xi = node.X.row(i);
      double* ai = A.row(i);
      for (std::size_t j = 0; j < node.dim(); ++j) ai[j] = node.y[i] * xi[j];
    }
    return MarginSet(std::move(A));
  }

  std::size_t constraints() const { return A.rows; }
  std::size_t dim() const { return A.cols; }

 private:
  void build_cache() {
    const std::size_t m = A.rows;
    row_sqnorm.assign(m, 0.0);
    gram = Matrix(m, m);
    const bool big = m * m * A.cols >= (std::size_t{1} << 22) && m >= 8;
    auto fill = [&](std::size_t i0, std::size_t i1) {
      for (std::size_t i = i0; i < i1; ++i) {
        const double* ai = A.row(i);
        for (std::size_t j = 0; j <= i; ++j) {
          const double* aj = A.row(j);
          double s = 0.0;
          for (std::size_t k = 0; k < A.cols; ++k) s += ai[k] * aj[k];
          gram(i, j) = s;
          gram(j, i) = s;
        }
        row_sqnorm[i] = gram(i, i);
      }
    };
    if (big) {
      const std::size_t nchunks = std::min<std::size_t>(32, m);
      parallel_for(nchunks, [&](std::size_t c) {
        fill(m * c / nchunks, m * (c + 1) / nchunks);
      });
    } else {
      fill(0, m);
    }
  }
};

// Stacks several nodes' constraints into one set.
inline MarginSet stack_margin_sets(const std::vector<MarginSet>& sets) {
  std::size_t m = 0, d = 0;
  for (const auto& s : sets) {
    m += s.constraints();
    if (d == 0) d = s.dim();
    if (s.dim() != d) throw DimensionError("stack_margin_sets: dim mismatch");
  }
  Matrix A(m, d);
  std::size_t r = 0;
  for (const auto& s : sets)
    for (std::size_t i = 0; i < s.constraints(); ++i, ++r)
      for (std::size_t j = 0; j < d; ++j) A(r, j) = s.A(i, j);
  return MarginSet(std::move(A));
}

inline double min_margin(const Vec& w, const MarginSet& set) {
  if (set.constraints() == 0) return std::numeric_limits<double>::infinity();
  Vec m = matvec(set.A, w);
  return *std::min_element(m.begin(), m.end());
}

enum class ProjectionStatus : std::uint8_t {
  converged = 0,
  infeasible_suspected = 1,
  max_iters = 2,
};

struct ProjectionResult {
  Vec w;
  Vec beta;                  // dual coefficients, one per constraint, >= 0
  double kkt_residual = 0.0; // raw max of primal violation and compl. slackness;
                             // convergence itself is certified with the
                             // complementarity term normalized by 1 + beta_j
  long iterations = 0;       // coordinate visits
  std::vector<std::size_t> active_set;  // indices with beta > 0
  ProjectionStatus status = ProjectionStatus::converged;
};

namespace detail {

inline Vec reconstruct_from_dual(const Vec& w0, const MarginSet& set, const Vec& beta) {
  Vec w(w0);
  for (std::size_t j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) {
      const double* aj = set.A.row(j);
      for (std::size_t k = 0; k < w.size(); ++k) w[k] += beta[j] * aj[k];
    }
  return w;
}

inline double kkt_residual_of(const Vec& margins, const Vec& beta) {
  double resid = 0.0;
  for (std::size_t j = 0; j < margins.size(); ++j) {
    resid = std::max(resid, 1.0 - margins[j]);                    // primal feasibility
    resid = std::max(resid, std::fabs(beta[j] * (margins[j] - 1.0)));  // compl. slackness
  }
  return std::max(resid, 0.0);
}

// Certification residual: primal violation stays absolute, but the
// complementarity term is normalized by 1 + beta_j. Ill-conditioned
// instances carry huge duals, and beta_j * O(eps) margin noise would
// otherwise put the raw residual permanently above any sane tolerance.
inline double kkt_residual_scaled(const Vec& margins, const Vec& beta) {
  double resid = 0.0;
  for (std::size_t j = 0; j < margins.size(); ++j) {
    resid = std::max(resid, 1.0 - margins[j]);
    resid = std::max(resid, beta[j] * std::fabs(margins[j] - 1.0) / (1.0 + beta[j]));
  }
  return std::max(resid, 0.0);
}

// Direct solve on a candidate active set S: (A_S A_S^T) beta_S = 1 - A_S w0,
// through a Cholesky of the cached Gram slice. Returns the full dual vector,
// or nothing when the slice is numerically rank-deficient or some beta_S
// comes out negative (wrong support).
inline std::optional<Vec> support_solve(const MarginSet& set, const Vec& base,
                                        const std::vector<std::size_t>& S) {
  const std::size_t n = S.size();
  Matrix low(n, n);
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, set.gram(S[i], S[i]));
  const double floor = 1e-12 * max_diag;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = set.gram(S[i], S[j]);
      for (std::size_t k = 0; k < j; ++k) s -= low(i, k) * low(j, k);
      if (i == j) {
        if (!(s >= floor)) return std::nullopt;
        low(i, i) = std::sqrt(s);
      } else {
        low(i, j) = s / low(j, j);
      }
    }
  }
  Vec u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = 1.0 - base[S[i]];
  for (std::size_t i = 0; i < n; ++i) {
    double s = u[i];
    for (std::size_t k = 0; k < i; ++k) s -= low(i, k) * u[k];
    u[i] = s / low(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = u[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= low(k, i) * u[k];
    u[i] = s / low(i, i);
  }
  Vec beta = zeros(set.constraints());
  for (std::size_t i = 0; i < n; ++i) {
    if (u[i] < 0.0) return std::nullopt;
    beta[S[i]] = u[i];
  }
  return beta;
}

}  // namespace detail

// Projects w0 onto the margin set. warm_beta (optional) seeds the dual,
// which round-based callers use to resume from the previous solve.
// max_iters <= 0 selects the default cap 200 * m * ln(1/tol).
inline ProjectionResult margin_project(const Vec& w0, const MarginSet& set, double tol = 1e-9,
                                       long max_iters = 0, const Vec* warm_beta = nullptr) {
  if (w0.size() != set.dim()) throw DimensionError("margin_project: w0 size mismatch");
  if (!(tol > 0.0)) throw ConfigError("margin_project: tol must be > 0");
  const std::size_t m = set.constraints();
  ProjectionResult res;
  if (m == 0) {
    res.w = w0;
    return res;
  }
  for (std::size_t j = 0; j < m; ++j)
    if (set.row_sqnorm[j] <= 0.0) {
      // a zero row demands 0 >= 1: the set is empty.
      res.w = w0;
      res.beta = zeros(m);
      res.kkt_residual = 1.0;
      res.status = ProjectionStatus::infeasible_suspected;
      return res;
    }
  if (max_iters <= 0)
    max_iters = static_cast<long>(200.0 * static_cast<double>(m) * std::log(1.0 / tol)) + 1;

  Vec beta = warm_beta ? *warm_beta : zeros(m);
  if (beta.size() != m) throw DimensionError("margin_project: warm start size mismatch");
  const Vec base = matvec(set.A, w0);
  Vec margins(base);
  for (std::size_t j = 0; j < m; ++j)
    if (beta[j] != 0.0) {
      const double* qj = set.gram.row(j);
      for (std::size_t i = 0; i < m; ++i) margins[i] += beta[j] * qj[i];
    }

  long iter = 0;
  double best_viol = std::numeric_limits<double>::infinity();
  auto finish = [&](ProjectionStatus status) {
    res.w = detail::reconstruct_from_dual(w0, set, beta);
    res.beta = std::move(beta);
    res.iterations = iter;
    Vec exact = matvec(set.A, res.w);
    res.kkt_residual = detail::kkt_residual_of(exact, res.beta);
    for (std::size_t j = 0; j < m; ++j)
      if (res.beta[j] > 0.0) res.active_set.push_back(j);
    res.status = status;
    return res;
  };
  auto try_polish = [&]() {
    std::vector<std::size_t> S;
    for (std::size_t j = 0; j < m; ++j)
      if (beta[j] > 0.0) S.push_back(j);
    if (S.empty()) return false;
    auto polished = detail::support_solve(set, base, S);
    if (!polished) return false;
    Vec w = detail::reconstruct_from_dual(w0, set, *polished);
    Vec exact = matvec(set.A, w);
    if (detail::kkt_residual_scaled(exact, *polished) > tol) return false;
    res.w = std::move(w);
    res.beta = std::move(*polished);
    res.iterations = iter;
    res.kkt_residual = detail::kkt_residual_of(exact, res.beta);
    for (std::size_t j = 0; j < m; ++j)
      if (res.beta[j] > 0.0) res.active_set.push_back(j);
    res.status = ProjectionStatus::converged;
    return true;
  };

  long sweeps = 0;
  long next_polish = 32;
  while (iter < max_iters) {
    for (std::size_t j = 0; j < m && iter < max_iters; ++j) {
      ++iter;
      const double g = 1.0 - margins[j];
      const double nb = std::max(0.0, beta[j] + g / set.row_sqnorm[j]);
      const double delta = nb - beta[j];
      if (delta == 0.0) continue;
      beta[j] = nb;
      const double* qj = set.gram.row(j);
      for (std::size_t i = 0; i < m; ++i) margins[i] += delta * qj[i];
    }
    ++sweeps;
    if (sweeps >= next_polish) {
      next_polish *= 2;
      if (try_polish()) return res;
    }
    const double resid = detail::kkt_residual_scaled(margins, beta);
    if (resid <= tol) {
      // Certify on exact margins; incremental drift forces a resync + retry.
      Vec w = detail::reconstruct_from_dual(w0, set, beta);
      Vec exact = matvec(set.A, w);
      if (detail::kkt_residual_scaled(exact, beta) <= tol) {
        res.w = std::move(w);
        res.beta = std::move(beta);
        res.iterations = iter;
        res.kkt_residual = detail::kkt_residual_of(exact, res.beta);
        for (std::size_t j = 0; j < m; ++j)
          if (res.beta[j] > 0.0) res.active_set.push_back(j);
        res.status = ProjectionStatus::converged;
        return res;
      }
      margins = std::move(exact);
      continue;
    }
    double viol = 0.0;
    for (std::size_t j = 0; j < m; ++j) viol = std::max(viol, 1.0 - margins[j]);
    double bnorm2 = 0.0;
    for (double b : beta) bnorm2 += b * b;
    if (bnorm2 > 1e16 && viol > 0.999 * best_viol)
      return finish(ProjectionStatus::infeasible_suspected);  // dual blow-up, no progress
    best_viol = std::min(best_viol, viol);
  }
  if (try_polish()) return res;
  return finish(ProjectionStatus::max_iters);
}

// Maximum-margin separator scaled to unit margin: the minimum-norm point of
// the intersection of all nodes' margin sets (projection of the origin).
inline ProjectionResult hard_margin_svm(const std::vector<MarginSet>& sets, double tol = 1e-9,
                                        long max_iters = 0) {
  MarginSet stacked = stack_margin_sets(sets);
  return margin_project(zeros(stacked.dim()), stacked, tol, max_iters);
}

// Feasibility probe: does any w satisfy every margin constraint? Local
// verdicts come per node; the global verdict uses the stacked set. A solve
// that fails to certify (infeasible_suspected or max_iters) counts as not
// separable.
struct SeparabilityReport {
  std::vector<bool> local;
  bool global = false;
};

inline SeparabilityReport check_separable(const FederatedDataset& fed, double tol = 1e-6) {
  SeparabilityReport rep;
  std::vector<MarginSet> sets;
  sets.reserve(fed.node_count());
  for (const auto& node : fed.nodes) sets.push_back(MarginSet::from_node(node));
  rep.local.resize(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    auto r = margin_project(zeros(fed.dim), sets[i], tol);
    rep.local[i] = r.status == ProjectionStatus::converged;
  }
  auto g = hard_margin_svm(sets, tol);
  rep.global = g.status == ProjectionStatus::converged;
  return rep;
}

}  // namespace fedsim

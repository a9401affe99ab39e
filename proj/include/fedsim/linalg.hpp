#pragma once

// Dense row-major matrices and the handful of kernels everything else is
// built from. The library works in the overparameterized orientation
// (n_rows <= n_cols) and never forms d x d operators: interpolating solves
// go through the n x n Gram matrix X X^T and its Cholesky factor.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/parallel.hpp"

namespace fedsim {

using Vec = std::vector<double>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major, rows*cols

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows_init) {
    Matrix m;
    m.rows = rows_init.size();
    m.cols = m.rows ? rows_init.begin()->size() : 0;
    m.a.reserve(m.rows * m.cols);
    for (const auto& r : rows_init) {
      if (r.size() != m.cols) throw DimensionError("from_rows: ragged rows");
      m.a.insert(m.a.end(), r.begin(), r.end());
    }
    return m;
  }
};

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }

inline double dot(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const Vec& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double norm_inf(const Vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw DimensionError("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline Vec sub(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw DimensionError("sub: size mismatch");
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
  return r;
}

inline Vec add(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw DimensionError("add: size mismatch");
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
  return r;
}

namespace detail {
// Work below this element count is not worth handing to the pool.
constexpr std::size_t kParallelMatvecThreshold = 1u << 18;
constexpr std::size_t kMatvecChunks = 32;  // fixed, so results never depend on thread count
}  // namespace detail

// y = A x
inline Vec matvec(const Matrix& A, const Vec& x) {
  if (x.size() != A.cols) throw DimensionError("matvec: size mismatch");
  Vec y(A.rows, 0.0);
  auto run_rows = [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      const double* ai = A.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < A.cols; ++j) s += ai[j] * x[j];
      y[i] = s;
    }
  };
  if (A.rows * A.cols < detail::kParallelMatvecThreshold || A.rows < 2) {
    run_rows(0, A.rows);
    return y;
  }
  const std::size_t nchunks = std::min(detail::kMatvecChunks, A.rows);
  parallel_for(nchunks, [&](std::size_t c) {
    std::size_t r0 = A.rows * c / nchunks;
    std::size_t r1 = A.rows * (c + 1) / nchunks;
    run_rows(r0, r1);
  });
  return y;
}

// y = A^T x. Chunk partials are combined in fixed chunk order so the result
// is identical for any thread count.
inline Vec matvec_t(const Matrix& A, const Vec& x) {
  if (x.size() != A.rows) throw DimensionError("matvec_t: size mismatch");
  if (A.rows * A.cols < detail::kParallelMatvecThreshold || A.rows < 2) {
    Vec y(A.cols, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
      const double* ai = A.row(i);
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < A.cols; ++j) y[j] += xi * ai[j];
    }
    return y;
  }
  const std::size_t nchunks = std::min(detail::kMatvecChunks, A.rows);
  std::vector<Vec> partial(nchunks);
  parallel_for(nchunks, [&](std::size_t c) {
    std::size_t r0 = A.rows * c / nchunks;
    std::size_t r1 = A.rows * (c + 1) / nchunks;
    Vec p(A.cols, 0.0);
    for (std::size_t i = r0; i < r1; ++i) {
      const double* ai = A.row(i);
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < A.cols; ++j) p[j] += xi * ai[j];
    }
    partial[c] = std::move(p);
  });
  Vec y(A.cols, 0.0);
  for (std::size_t c = 0; c < nchunks; ++c)
    for (std::size_t j = 0; j < A.cols; ++j) y[j] += partial[c][j];
  return y;
}

// Cholesky factor of the Gram matrix X X^T. Owns everything needed to apply
// (X X^T)^{-1} without touching X again.
struct GramFactor {
  std::size_t size = 0;
  Matrix lower;     // n x n, lower triangle holds L with X X^T = L L^T
  double min_diag = 0.0;  // smallest diagonal entry of L

  // Solves (X X^T) u = b by forward then back substitution.
  Vec solve(const Vec& b) const {
    if (b.size() != size) throw DimensionError("GramFactor::solve: size mismatch");
    Vec u(b);
    for (std::size_t i = 0; i < size; ++i) {
      const double* li = lower.row(i);
      double s = u[i];
      for (std::size_t k = 0; k < i; ++k) s -= li[k] * u[k];
      u[i] = s / li[i];
    }
    for (std::size_t i = size; i-- > 0;) {
      double s = u[i];
      for (std::size_t k = i + 1; k < size; ++k) s -= lower(k, i) * u[k];
      u[i] = s / lower(i, i);
    }
    return u;
  }
};

// Factorizes X X^T for a wide matrix X (n_rows <= n_cols). Throws
// RankDeficientError when a pivot falls below 1e-10 times the largest
// Gram diagonal; no regularized fallback is attempted.
inline GramFactor gram_factorize(const Matrix& X) {
  if (X.rows > X.cols)
    throw DimensionError("gram_factorize: requires n_rows <= n_cols, got " +
                         std::to_string(X.rows) + " x " + std::to_string(X.cols));
  const std::size_t n = X.rows;
  GramFactor f;
  f.size = n;
  f.lower = Matrix(n, n);
  if (n == 0) return f;

  Matrix g(n, n);  // lower triangle of X X^T
  const bool big = n * n * X.cols >= (std::size_t{1} << 22) && n >= 4;
  auto fill_rows = [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const double* xi = X.row(i);
      for (std::size_t j = 0; j <= i; ++j) {
        const double* xj = X.row(j);
        double s = 0.0;
        for (std::size_t k = 0; k < X.cols; ++k) s += xi[k] * xj[k];
        g(i, j) = s;
      }
    }
  };
  if (big) {
    const std::size_t nchunks = std::min<std::size_t>(detail::kMatvecChunks, n);
    parallel_for(nchunks, [&](std::size_t c) {
      fill_rows(n * c / nchunks, n * (c + 1) / nchunks);
    });
  } else {
    fill_rows(0, n);
  }

  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, g(i, i));
  const double floor = 1e-10 * max_diag;

  f.min_diag = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = g(j, j);
    const double* lj = f.lower.row(j);
    for (std::size_t k = 0; k < j; ++k) pivot -= lj[k] * lj[k];
    if (!(pivot >= floor))
      throw RankDeficientError("gram_factorize: pivot " + std::to_string(pivot) +
                               " below threshold at row " + std::to_string(j));
    const double ljj = std::sqrt(pivot);
    f.lower(j, j) = ljj;
    f.min_diag = std::min(f.min_diag, ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = g(i, j);
      const double* li = f.lower.row(i);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      f.lower(i, j) = s / ljj;
    }
  }
  return f;
}

// Minimum-norm interpolator X^T (X X^T)^{-1} y: the point GD on squared loss
// converges to from zero initialization.
inline Vec min_norm_interpolator(const Matrix& X, const Vec& y, const GramFactor& f) {
  if (y.size() != X.rows) throw DimensionError("min_norm_interpolator: y size mismatch");
  return matvec_t(X, f.solve(y));
}

inline Vec min_norm_interpolator(const Matrix& X, const Vec& y) {
  return min_norm_interpolator(X, y, gram_factorize(X));
}

// Euclidean projection of w0 onto the affine solution set {w : X w = y}:
// w0 + X^T (X X^T)^{-1} (y - X w0).
inline Vec affine_project(const Vec& w0, const Matrix& X, const Vec& y, const GramFactor& f) {
  if (w0.size() != X.cols) throw DimensionError("affine_project: w0 size mismatch");
  if (y.size() != X.rows) throw DimensionError("affine_project: y size mismatch");
  Vec r = matvec(X, w0);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
  Vec corr = matvec_t(X, f.solve(r));
  Vec w(w0);
  axpy(1.0, corr, w);
  return w;
}

inline Vec affine_project(const Vec& w0, const Matrix& X, const Vec& y) {
  return affine_project(w0, X, y, gram_factorize(X));
}

// Orthogonal projection onto the row space of X: X^T (X X^T)^{-1} X v.
inline Vec project_row_space(const Matrix& X, const Vec& v, const GramFactor& f) {
  if (v.size() != X.cols) throw DimensionError("project_row_space: v size mismatch");
  return matvec_t(X, f.solve(matvec(X, v)));
}

inline Vec project_row_space(const Matrix& X, const Vec& v) {
  return project_row_space(X, v, gram_factorize(X));
}

}  // namespace fedsim

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fedsim/projection.hpp"
#include "fedsim/rng.hpp"

#include "oracles.hpp"

using namespace fedsim;

namespace {
Matrix random_rows(Rng& rng, std::size_t m, std::size_t d) {
  Matrix A(m, d);
  for (double& v : A.a) v = rng.normal();
  return A;
}
}  // namespace

TEST_CASE("two-constraint toy projection is exact", "[projection]") {
  // {w1 >= 1} and {w2 >= 1} from the origin: nearest point is (1, 1)
  const MarginSet set(Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}));
  const auto r = margin_project(zeros(2), set, 1e-12);
  REQUIRE(r.status == ProjectionStatus::converged);
  CHECK(r.w[0] == Catch::Approx(1.0).margin(1e-10));
  CHECK(r.w[1] == Catch::Approx(1.0).margin(1e-10));
  CHECK(r.active_set == std::vector<std::size_t>{0, 1});
  CHECK(r.kkt_residual <= 1e-12);
}

TEST_CASE("feasible points are returned bit-exactly with an empty active set", "[projection]") {
  const MarginSet set(Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}));
  const Vec w0 = {2.5, 1.0};
  const auto r = margin_project(w0, set);
  CHECK(r.w == w0);
  CHECK(r.active_set.empty());
  CHECK(r.iterations <= static_cast<long>(2 * set.constraints()));
}

TEST_CASE("projection agrees with the active-set enumeration oracle", "[projection]") {
  Rng rng(401);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 2 + rng.index(7);   // up to 8 constraints
    const std::size_t d = 2 + rng.index(5);   // up to 6 dims
    const Matrix A = random_rows(rng, m, d);
    Vec w0(d);
    for (double& v : w0) v = 2.0 * rng.normal();
    const auto oracle = oracles::project_enumerate(w0, A);
    const MarginSet set(A);
    const auto r = margin_project(w0, set, 1e-9);
    if (!oracle.feasible) {
      CHECK(r.status != ProjectionStatus::converged);
      continue;
    }
    REQUIRE(r.status == ProjectionStatus::converged);
    CHECK(norm_inf(sub(r.w, oracle.w)) < 1e-7);
    // a scaled solution is strictly feasible; projecting it is the identity
    Vec inside = r.w;
    scale(inside, 2.0);
    const auto rid = margin_project(inside, set, 1e-9);
    CHECK(rid.w == inside);
    CHECK(rid.active_set.empty());
  }
}

TEST_CASE("KKT certificate fields are mutually consistent", "[projection]") {
  Rng rng(402);
  const Matrix A = random_rows(rng, 8, 5);
  Vec w0(5);
  for (double& v : w0) v = rng.normal();
  const MarginSet set(A);
  const auto r = margin_project(w0, set, 1e-10);
  REQUIRE(r.status == ProjectionStatus::converged);
  // stationarity: w = w0 + A^T beta, reconstructed independently
  Vec recon = w0;
  for (std::size_t j = 0; j < r.beta.size(); ++j)
    for (std::size_t k = 0; k < 5; ++k) recon[k] += r.beta[j] * A(j, k);
  CHECK(norm_inf(sub(recon, r.w)) < 1e-9 * std::max(1.0, norm_inf(r.w)));
  // dual feasibility and active set bookkeeping
  for (std::size_t j = 0; j < r.beta.size(); ++j) {
    CHECK(r.beta[j] >= 0.0);
    const bool active =
        std::find(r.active_set.begin(), r.active_set.end(), j) != r.active_set.end();
    CHECK(active == (r.beta[j] > 0.0));
  }
  // primal feasibility and complementary slackness within the residual
  const Vec m = matvec(A, r.w);
  for (std::size_t j = 0; j < m.size(); ++j) {
    CHECK(m[j] >= 1.0 - r.kkt_residual - 1e-12);
    CHECK(r.beta[j] * (m[j] - 1.0) <= r.kkt_residual + 1e-12);
  }
}

TEST_CASE("projection is firmly nonexpansive (spot check)", "[projection]") {
  Rng rng(403);
  const Matrix A = random_rows(rng, 6, 4);
  const MarginSet set(A);
  for (int trial = 0; trial < 10; ++trial) {
    Vec u(4), v(4);
    for (double& x : u) x = 2 * rng.normal();
    for (double& x : v) x = 2 * rng.normal();
    const auto pu = margin_project(u, set, 1e-11);
    const auto pv = margin_project(v, set, 1e-11);
    if (pu.status != ProjectionStatus::converged || pv.status != ProjectionStatus::converged)
      continue;
    CHECK(norm2(sub(pu.w, pv.w)) <= norm2(sub(u, v)) + 1e-9);
  }
}

TEST_CASE("warm starts reproduce the cold solution faster", "[projection]") {
  Rng rng(404);
  Matrix A = random_rows(rng, 10, 6);
  // pin the first coordinate positive so the intersection is nonempty
  for (std::size_t i = 0; i < A.rows; ++i) A(i, 0) = 0.6 + std::fabs(A(i, 0));
  const MarginSet set(A);
  Vec w0(6, 0.0);
  const auto cold = margin_project(w0, set, 1e-10);
  REQUIRE(cold.status == ProjectionStatus::converged);
  const auto warm = margin_project(w0, set, 1e-10, 0, &cold.beta);
  REQUIRE(warm.status == ProjectionStatus::converged);
  CHECK(norm_inf(sub(warm.w, cold.w)) < 1e-8);
  CHECK(warm.iterations <= cold.iterations);
}

TEST_CASE("infeasible intersections are flagged, not solved", "[projection]") {
  // w1 >= 1 and -w1 >= 1 cannot hold together
  const MarginSet set(Matrix::from_rows({{1.0, 0.0}, {-1.0, 0.0}}));
  const auto r = margin_project(zeros(2), set, 1e-9);
  CHECK(r.status != ProjectionStatus::converged);
  // a zero constraint row is immediately infeasible
  const MarginSet zero_row(Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}}));
  const auto rz = margin_project(zeros(2), zero_row);
  CHECK(rz.status == ProjectionStatus::infeasible_suspected);
}

TEST_CASE("hard-margin SVM equals the oracle min-norm point on stacked sets", "[projection]") {
  Rng rng(405);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<MarginSet> sets;
    Matrix all(6, 4);
    std::size_t r = 0;
    for (int s = 0; s < 2; ++s) {
      Matrix A = random_rows(rng, 3, 4);
      for (std::size_t i = 0; i < 3; ++i, ++r)
        for (std::size_t j = 0; j < 4; ++j) all(r, j) = A(i, j);
      sets.push_back(MarginSet(std::move(A)));
    }
    const auto oracle = oracles::project_enumerate(zeros(4), all);
    const auto svm = hard_margin_svm(sets, 1e-11);
    if (!oracle.feasible) {
      CHECK(svm.status != ProjectionStatus::converged);
      continue;
    }
    REQUIRE(svm.status == ProjectionStatus::converged);
    CHECK(norm_inf(sub(svm.w, oracle.w)) < 1e-7);
    CHECK(min_margin(svm.w, stack_margin_sets(sets)) >= 1.0 - 1e-9);
  }
}

TEST_CASE("min_margin computes the smallest label-weighted margin", "[projection]") {
  const MarginSet set(Matrix::from_rows({{1.0, 0.0}, {0.0, 2.0}}));
  CHECK(min_margin({1.0, 1.0}, set) == Catch::Approx(1.0));
  CHECK(min_margin({3.0, 0.1}, set) == Catch::Approx(0.2));
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fedsim/datagen.hpp"
#include "fedsim/loss.hpp"
#include "fedsim/projection.hpp"
#include "fedsim/rng.hpp"

#include "oracles.hpp"

using namespace fedsim;

namespace {
NodeDataset random_node(Rng& rng, std::size_t n, std::size_t d, bool classify) {
  NodeDataset node;
  node.X = Matrix(n, d);
  for (double& v : node.X.a) v = rng.normal();
  node.y.resize(n);
  for (double& v : node.y) v = classify ? (rng.normal() >= 0 ? 1.0 : -1.0) : rng.normal();
  return node;
}
}  // namespace

TEST_CASE("hand-evaluated losses", "[loss]") {
  NodeDataset node;
  node.X = Matrix::from_rows({{1.0}});
  node.y = {1.0};
  // exp loss at w = ln 2: exp(-ln 2) + lambda/2 (ln 2)^2
  const double w = std::log(2.0);
  const auto ev = loss_value(LossSpec::exp_loss(1e-4), node, {w});
  CHECK(ev.value == Catch::Approx(0.5 + 0.5e-4 * w * w).epsilon(1e-14));
  CHECK_FALSE(ev.clamped);
  // squared loss is unnormalized: 1/2 (y - xw)^2
  const auto sv = loss_value(LossSpec::squared_loss(), node, {3.0});
  CHECK(sv.value == Catch::Approx(0.5 * 4.0).epsilon(1e-14));
}

TEST_CASE("gradients match central differences on both losses", "[loss]") {
  Rng rng(301);
  for (int trial = 0; trial < 10; ++trial) {
    NodeDataset reg = random_node(rng, 6, 9, false);
    Vec w(9);
    for (double& v : w) v = 0.4 * rng.normal();
    const Vec g = loss_grad(LossSpec::squared_loss(), reg, w);
    const Vec fd = oracles::fd_gradient(LossSpec::squared_loss(), reg, w);
    CHECK(norm_inf(sub(g, fd)) / std::max(1.0, norm_inf(g)) < 1e-5);

    NodeDataset cls = random_node(rng, 6, 9, true);
    Vec anchor(9);
    for (double& v : anchor) v = rng.normal();
    const LossSpec spec = LossSpec::exp_loss(1e-3, anchor);
    const Vec g2 = loss_grad(spec, cls, w);
    const Vec fd2 = oracles::fd_gradient(spec, cls, w);
    CHECK(norm_inf(sub(g2, fd2)) / std::max(1.0, norm_inf(g2)) < 1e-5);
  }
}

TEST_CASE("anchor shifts the regularizer, not the data term", "[loss]") {
  Rng rng(302);
  NodeDataset cls = random_node(rng, 5, 7, true);
  Vec w(7), anchor(7);
  for (double& v : w) v = rng.normal();
  for (double& v : anchor) v = rng.normal();
  const double at_anchor = loss_value(LossSpec::exp_loss(10.0, w), cls, w).value;
  const double away = loss_value(LossSpec::exp_loss(10.0, anchor), cls, w).value;
  CHECK(away > at_anchor);  // pulling toward a different anchor costs loss
  // gradient at the anchor has no regularization component
  const Vec g_anchored = loss_grad(LossSpec::exp_loss(10.0, w), cls, w);
  const Vec g_plain = loss_grad(LossSpec::exp_loss(1e-300, w), cls, w);
  CHECK(norm_inf(sub(g_anchored, g_plain)) < 1e-10);
}

TEST_CASE("huge negative margins clamp instead of overflowing", "[loss]") {
  NodeDataset node;
  node.X = Matrix::from_rows({{1.0}});
  node.y = {1.0};
  const auto ev = loss_value(LossSpec::exp_loss(1e-4), node, {-800.0});
  CHECK(ev.clamped);
  CHECK(std::isfinite(ev.value));
  const Vec g = loss_grad(LossSpec::exp_loss(1e-4), node, {-800.0});
  CHECK(std::isfinite(g[0]));
}

TEST_CASE("local squared-loss descent reaches the affine projection", "[loss]") {
  Rng rng(303);
  NodeDataset node = random_node(rng, 10, 40, false);
  Vec w0(40);
  for (double& v : w0) v = rng.normal();
  // eta below 1/largest-eigenvalue; many steps converge to the projection
  LocalUpdateConfig cfg{20000, 5e-3, 1e-13};
  const auto res = local_update(w0, node, LossSpec::squared_loss(), cfg);
  const Vec target = affine_project(w0, node.X, node.y);
  CHECK(norm_inf(sub(res.w, target)) < 1e-6 * std::max(1.0, norm_inf(target)));
  CHECK(norm_inf(sub(matvec(node.X, res.w), node.y)) <= 1e-6 * norm_inf(node.y));
  CHECK_FALSE(res.hit_step_cap);
  CHECK(res.grad_norm <= cfg.stop_grad_norm);
}

TEST_CASE("exp-loss descent aligns with the max-margin direction", "[loss]") {
  Rng rng(304);
  GenConfig g{1, 8, 30, 4.0, 1.0, 1.0, 42};
  const FederatedDataset fed = gen_classification(g);
  const NodeDataset& node = fed.nodes[0];
  const auto svm = margin_project(zeros(30), MarginSet::from_node(node), 1e-10);
  REQUIRE(svm.status == ProjectionStatus::converged);
  auto direction_gap = [&](const Vec& w) {
    const double n1 = norm2(w), n2 = norm2(svm.w);
    double dd = 0;
    for (std::size_t i = 0; i < 30; ++i) {
      const double t = w[i] / n1 - svm.w[i] / n2;
      dd += t * t;
    }
    return std::sqrt(dd);
  };
  // the regularizer keeps the limit a bounded distance from the max-margin
  // direction (shrinking like 1/log(1/lambda)); descent closes most of the
  // gap and never reopens it
  const auto early = local_update(zeros(30), node, LossSpec::exp_loss(1e-4), {2000, 1e-2, 0.0});
  const auto late = local_update(zeros(30), node, LossSpec::exp_loss(1e-4), {60000, 1e-2, 0.0});
  CHECK(direction_gap(late.w) < direction_gap(early.w));
  CHECK(direction_gap(late.w) < 0.2);
  // normalized by its smallest margin, every margin clears 1 - 0.05
  Vec m = matvec(node.X, late.w);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] *= node.y[i];
  const double smallest = *std::min_element(m.begin(), m.end());
  CHECK(smallest > 0);
  for (double v : m) CHECK(v / smallest >= 1.0 - 0.05);
}

TEST_CASE("step cap and gradient-tolerance exits are reported", "[loss]") {
  Rng rng(305);
  NodeDataset node = random_node(rng, 4, 10, false);
  const auto capped = local_update(zeros(10), node, LossSpec::squared_loss(), {3, 1e-3, 0.0});
  CHECK(capped.steps_taken == 3);
  CHECK(capped.hit_step_cap);
  const auto converged = local_update(zeros(10), node, LossSpec::squared_loss(), {100000, 5e-2, 1e-10});
  CHECK_FALSE(converged.hit_step_cap);
  CHECK(converged.steps_taken < 100000);
}

TEST_CASE("divergence is detected and reported", "[loss]") {
  Rng rng(306);
  NodeDataset node = random_node(rng, 4, 10, false);
  CHECK_THROWS_AS(local_update(zeros(10), node, LossSpec::squared_loss(), {1000, 1.0, 0.0}),
                  DivergedError);
}

TEST_CASE("exp loss requires a positive lambda", "[loss]") {
  NodeDataset node;
  node.X = Matrix::from_rows({{1.0}});
  node.y = {1.0};
  CHECK_THROWS_AS(loss_value(LossSpec::exp_loss(0.0), node, {1.0}), ConfigError);
}

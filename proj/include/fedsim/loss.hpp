#pragma once

// Local objectives and the inner gradient-descent loop one node runs
// between aggregations.
//
//   squared:  f(w) = 1/2 ||y - X w||^2
//   exp_reg:  f(w) = sum_j exp(-y_j x_j^T w) + lambda/2 ||w - anchor||^2
//
// The exponent is clamped at 700 to keep exp() finite; any clamp event is
// surfaced as a diagnostic flag.

#include <cmath>
#include <cstdint>
#include <string>

#include "fedsim/dataset.hpp"
#include "fedsim/linalg.hpp"

namespace fedsim {

enum class LossKind : std::uint8_t { squared = 0, exp_reg = 1 };

struct LossSpec {
  LossKind kind = LossKind::squared;
  double lambda = 0.0;  // exp_reg regularization weight, > 0 required there
  Vec anchor;           // exp_reg pulls w toward this point; empty means origin

  static LossSpec squared_loss() { return {LossKind::squared, 0.0, {}}; }
  static LossSpec exp_loss(double lambda, Vec anchor_point = {}) {
    return {LossKind::exp_reg, lambda, std::move(anchor_point)};
  }
};

struct LocalUpdateConfig {
  long steps = 1;                  // L, the local step cap
  double eta = 1e-2;               // step size
  double stop_grad_norm = 1e-12;   // early exit when ||grad|| falls below
};

constexpr double kExpClamp = 700.0;

struct LossEval {
  double value = 0.0;
  bool clamped = false;
};

namespace detail {

struct LossGradEval {
  double value = 0.0;
  Vec grad;
  bool clamped = false;
};

// One pass: margins/residuals are computed once and reused for both the
// value and the gradient.
inline LossGradEval eval_loss_grad(const LossSpec& spec, const NodeDataset& node, const Vec& w) {
  if (w.size() != node.dim()) throw DimensionError("loss: w size mismatch");
  LossGradEval out;
  if (spec.kind == LossKind::squared) {
    Vec r = matvec(node.X, w);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= node.y[j];
    out.value = 0.5 * dot(r, r);
    out.grad = matvec_t(node.X, r);
    return out;
  }
  if (!(spec.lambda > 0.0)) throw ConfigError("exp_reg requires lambda > 0");
  if (!spec.anchor.empty() && spec.anchor.size() != w.size())
    throw DimensionError("loss: anchor size mismatch");
  Vec m = matvec(node.X, w);
  Vec coeff(m.size());
  double value = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    double e = -node.y[j] * m[j];
    if (e > kExpClamp) {
      e = kExpClamp;
      out.clamped = true;
    }
    const double c = std::exp(e);
    value += c;
    coeff[j] = -node.y[j] * c;
  }
  out.grad = matvec_t(node.X, coeff);
  double reg = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double diff = w[j] - (spec.anchor.empty() ? 0.0 : spec.anchor[j]);
    reg += diff * diff;
    out.grad[j] += spec.lambda * diff;
  }
  out.value = value + 0.5 * spec.lambda * reg;
  return out;
}

}  // namespace detail

inline LossEval loss_value(const LossSpec& spec, const NodeDataset& node, const Vec& w) {
  auto e = detail::eval_loss_grad(spec, node, w);
  return {e.value, e.clamped};
}

inline Vec loss_grad(const LossSpec& spec, const NodeDataset& node, const Vec& w) {
  return detail::eval_loss_grad(spec, node, w).grad;
}

struct LocalUpdateResult {
  Vec w;
  long steps_taken = 0;
  double grad_norm = 0.0;     // at the returned iterate
  bool clamped = false;       // any exponent clamp during the run
  bool hit_step_cap = false;  // false means the gradient tolerance fired
};

// Runs at most cfg.steps plain GD steps from w0, stopping early once
// ||grad|| <= cfg.stop_grad_norm. Throws DivergedError once the loss stops
// being finite or grows past 10x its starting value (step size too large).
inline LocalUpdateResult local_update(const Vec& w0, const NodeDataset& node,
                                      const LossSpec& spec, const LocalUpdateConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw ConfigError("local_update: eta must be > 0");
  if (cfg.steps < 0) throw ConfigError("local_update: steps must be >= 0");
  LocalUpdateResult res;
  res.w = w0;
  auto eval = detail::eval_loss_grad(spec, node, res.w);
  const double initial = eval.value;
  const double blowup = 10.0 * initial + 1e-12;
  for (long l = 0; l < cfg.steps; ++l) {
    res.clamped = res.clamped || eval.clamped;
    res.grad_norm = norm2(eval.grad);
    if (res.grad_norm <= cfg.stop_grad_norm) return res;
    axpy(-cfg.eta, eval.grad, res.w);
    ++res.steps_taken;
    eval = detail::eval_loss_grad(spec, node, res.w);
    if (!(eval.value <= blowup) || !std::isfinite(eval.value))
      throw DivergedError("local_update: loss grew from " + std::to_string(initial) +
                              " to " + std::to_string(eval.value) + " at step " +
                              std::to_string(l + 1),
                          -1, -1, l + 1);
  }
  res.clamped = res.clamped || eval.clamped;
  res.grad_norm = norm2(eval.grad);
  res.hit_step_cap = cfg.steps > 0 && res.grad_norm > cfg.stop_grad_norm;
  return res;
}

}  // namespace fedsim

#pragma once

// Communication-round protocols. Each round, nodes refine the incoming
// global model independently (in parallel, one task per node) and the server
// averages the results; the anchored variant blends that average back
// toward the initial point with a weight that decays to one:
//
//   vanilla:   w^{k}   = (1/M) sum_i w_i
//   anchored:  w^{k}   = (1 - alpha(k)) w^0 + alpha(k) (1/M) sum_i w_i
//
// with alpha(k) = 1 - 1/(k+1) by default (k = 1 for the first aggregate).
// Node results are always reduced sequentially in node order, so outcomes
// do not depend on the thread count.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/hash.hpp"
#include "fedsim/linalg.hpp"
#include "fedsim/loss.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/projection.hpp"

namespace fedsim {

struct AlphaSchedule {
  std::string name;
  std::function<double(long)> alpha;  // k >= 1, index of the aggregate produced

  // 1 - 1/(k+1): satisfies alpha -> 1, sum(1 - alpha) = inf,
  // sum |alpha(k+1) - alpha(k)| < inf.
  static AlphaSchedule harmonic() {
    return {"harmonic", [](long k) { return 1.0 - 1.0 / static_cast<double>(k + 1); }};
  }
  // Degenerate schedule: anchored aggregation collapses to vanilla.
  static AlphaSchedule constant_one() {
    return {"constant_one", [](long) { return 1.0; }};
  }
};

struct Aggregation {
  bool anchored = false;
  AlphaSchedule schedule;

  static Aggregation vanilla() { return {false, {}}; }
  static Aggregation anchored_harmonic() { return {true, AlphaSchedule::harmonic()}; }
};

struct ProtocolConfig {
  long rounds = 1;
  LocalUpdateConfig local;
  double lambda = 1e-4;  // exp_reg weight for classification tasks
  Aggregation aggregation = Aggregation::vanilla();
  Vec init;              // empty means the origin
  long record_every = 1; // globals kept at rounds 0, record_every, ...; final always kept
};

struct NodeDiag {
  long steps = 0;
  double grad_norm = 0.0;
  bool clamped = false;
};

struct Trajectory {
  std::vector<Vec> globals;          // recorded global models
  std::vector<long> round_indices;   // rounds the globals belong to (0 = init)
  std::vector<std::vector<NodeDiag>> diagnostics;  // one entry per executed round
  std::uint64_t config_fingerprint = 0;

  const Vec& final_model() const { return globals.back(); }
};

namespace detail {

inline std::uint64_t fingerprint(std::string_view protocol, const FederatedDataset& fed,
                                 const ProtocolConfig& cfg) {
  std::string s(protocol);
  s += "|M=" + std::to_string(fed.node_count()) + "|d=" + std::to_string(fed.dim) +
       "|n=" + std::to_string(fed.total_samples()) +
       "|task=" + std::to_string(static_cast<int>(fed.task)) +
       "|K=" + std::to_string(cfg.rounds) + "|L=" + std::to_string(cfg.local.steps) +
       "|eta=" + std::to_string(cfg.local.eta) + "|lambda=" + std::to_string(cfg.lambda) +
       "|anchored=" + (cfg.aggregation.anchored ? cfg.aggregation.schedule.name : "no");
  std::uint64_t h = fnv1a64(s);
  if (!cfg.init.empty()) h = fnv1a64(cfg.init, h);
  return h;
}

inline void validate_schedule(const AlphaSchedule& s) {
  // Only the built-ins are checked; a custom schedule is the caller's claim.
  if (s.name == "harmonic" || s.name == "constant_one" || s.name.empty()) return;
  if (s.name.rfind("constant_", 0) == 0)
    throw ConfigError("alpha schedule '" + s.name +
                      "' violates the anchoring conditions (alpha must tend to 1)");
}

inline Vec initial_model(const ProtocolConfig& cfg, std::size_t d) {
  if (cfg.init.empty()) return zeros(d);
  if (cfg.init.size() != d) throw DimensionError("protocol init has wrong dimension");
  return cfg.init;
}

inline LossSpec loss_for(const FederatedDataset& fed, const ProtocolConfig& cfg, const Vec& anchor) {
  if (fed.task == Task::regression) return LossSpec::squared_loss();
  return LossSpec::exp_loss(cfg.lambda, anchor);
}

struct NodeFailure {
  bool failed = false;
  std::string what;
  long step = -1;
};

// One synchronous round: every node runs its local solver from the incoming
// global model. Failures are re-thrown in node order afterwards.
inline std::vector<LocalUpdateResult> run_round(const FederatedDataset& fed,
                                                const ProtocolConfig& cfg, const Vec& incoming,
                                                long round) {
  const std::size_t M = fed.node_count();
  std::vector<LocalUpdateResult> results(M);
  std::vector<NodeFailure> failures(M);
  parallel_for(M, [&](std::size_t i) {
    try {
      const LossSpec spec = loss_for(fed, cfg, incoming);
      results[i] = local_update(incoming, fed.nodes[i], spec, cfg.local);
    } catch (const DivergedError& e) {
      failures[i] = {true, e.what(), e.step};
    }
  });
  for (std::size_t i = 0; i < M; ++i)
    if (failures[i].failed)
      throw DivergedError("round " + std::to_string(round) + ", node " + std::to_string(i) +
                              ": " + failures[i].what,
                          round, static_cast<long>(i), failures[i].step);
  return results;
}

inline Vec mean_of(const std::vector<LocalUpdateResult>& results, std::size_t d) {
  Vec mean = zeros(d);
  for (const auto& r : results) axpy(1.0, r.w, mean);  // fixed node order
  scale(mean, 1.0 / static_cast<double>(results.size()));
  return mean;
}

inline void record(Trajectory& traj, const Vec& w, long round, const ProtocolConfig& cfg,
                   long total_rounds) {
  const long every = cfg.record_every > 0 ? cfg.record_every : 1;
  if (round % every == 0 || round == total_rounds) {
    traj.globals.push_back(w);
    traj.round_indices.push_back(round);
  }
}

inline Trajectory run_local_gd(const FederatedDataset& fed, const ProtocolConfig& cfg,
                               const Aggregation& agg, std::string_view label) {
  if (fed.node_count() == 0) throw ConfigError("protocol needs at least one node");
  if (cfg.rounds < 0) throw ConfigError("rounds must be >= 0");
  if (agg.anchored) validate_schedule(agg.schedule);
  Trajectory traj;
  traj.config_fingerprint = fingerprint(label, fed, cfg);
  const Vec w_init = initial_model(cfg, fed.dim);
  Vec w = w_init;
  record(traj, w, 0, cfg, cfg.rounds);
  for (long k = 1; k <= cfg.rounds; ++k) {
    auto results = run_round(fed, cfg, w, k);
    Vec mean = mean_of(results, fed.dim);
    if (agg.anchored) {
      const double a = agg.schedule.alpha(k);
      w = zeros(fed.dim);
      axpy(1.0 - a, w_init, w);
      axpy(a, mean, w);
    } else {
      w = std::move(mean);
    }
    std::vector<NodeDiag> diag(results.size());
    for (std::size_t i = 0; i < results.size(); ++i)
      diag[i] = {results[i].steps_taken, results[i].grad_norm, results[i].clamped};
    traj.diagnostics.push_back(std::move(diag));
    record(traj, w, k, cfg, cfg.rounds);
  }
  return traj;
}

}  // namespace detail

// Plain local GD with periodic averaging (FedAvg with L local steps).
inline Trajectory local_gd(const FederatedDataset& fed, const ProtocolConfig& cfg) {
  return detail::run_local_gd(fed, cfg, Aggregation::vanilla(), "local_gd");
}

// Anchored variant: the aggregate is blended back toward the initial model,
// which steers classification runs to the max-margin point of the
// intersection instead of the average of per-node directions.
inline Trajectory modified_local_gd(const FederatedDataset& fed, const ProtocolConfig& cfg) {
  Aggregation agg = cfg.aggregation.anchored ? cfg.aggregation : Aggregation::anchored_harmonic();
  return detail::run_local_gd(fed, cfg, agg, "modified_local_gd");
}

// Cached per-node interpolation operators for the regression fixed-point
// recursion  w^{k+1} = (I - Pbar) w^k + Ybar, applied through per-node Gram
// solves only (no d x d matrices). When ground truth is available the label
// average splits as Ybar = Qbar + Zbar (signal and noise components).
struct RegressionOperators {
  std::vector<GramFactor> factors;
  const FederatedDataset* fed = nullptr;
  Vec ybar;
  std::optional<Vec> qbar;  // (1/M) sum_i P_i w_i*
  std::optional<Vec> zbar;  // (1/M) sum_i X_i^+ (y_i - X_i w_i*)

  // Pbar v = (1/M) sum_i X_i^T (X_i X_i^T)^{-1} X_i v
  Vec apply_pbar(const Vec& v) const {
    const std::size_t M = fed->node_count();
    std::vector<Vec> proj(M);
    parallel_for(M, [&](std::size_t i) {
      proj[i] = project_row_space(fed->nodes[i].X, v, factors[i]);
    });
    Vec out = zeros(fed->dim);
    for (const auto& p : proj) axpy(1.0, p, out);
    scale(out, 1.0 / static_cast<double>(M));
    return out;
  }
};

inline RegressionOperators make_regression_operators(const FederatedDataset& fed) {
  if (fed.task != Task::regression)
    throw ConfigError("regression operators need a regression dataset");
  RegressionOperators ops;
  ops.fed = &fed;
  const std::size_t M = fed.node_count();
  ops.factors.resize(M);
  std::vector<Vec> interp(M), signal(M), noise(M);
  const bool truth = fed.has_truth();
  parallel_for(M, [&](std::size_t i) {
    const auto& node = fed.nodes[i];
    ops.factors[i] = gram_factorize(node.X);
    interp[i] = min_norm_interpolator(node.X, node.y, ops.factors[i]);
    if (truth) {
      signal[i] = project_row_space(node.X, node.w_star, ops.factors[i]);
      Vec resid = sub(node.y, matvec(node.X, node.w_star));
      noise[i] = matvec_t(node.X, ops.factors[i].solve(resid));
    }
  });
  ops.ybar = zeros(fed.dim);
  for (const auto& v : interp) axpy(1.0, v, ops.ybar);
  scale(ops.ybar, 1.0 / static_cast<double>(M));
  if (truth) {
    Vec q = zeros(fed.dim), z = zeros(fed.dim);
    for (const auto& v : signal) axpy(1.0, v, q);
    for (const auto& v : noise) axpy(1.0, v, z);
    scale(q, 1.0 / static_cast<double>(M));
    scale(z, 1.0 / static_cast<double>(M));
    ops.qbar = std::move(q);
    ops.zbar = std::move(z);
  }
  return ops;
}

// Closed-form equivalent of local_gd on squared loss with exact local
// solves: iterates w^{k+1} = (I - Pbar) w^k + Ybar.
inline Trajectory closed_form_regression(const FederatedDataset& fed, long rounds,
                                         const Vec& init = {}, long record_every = 1) {
  ProtocolConfig cfg;
  cfg.rounds = rounds;
  cfg.init = init;
  cfg.record_every = record_every;
  Trajectory traj;
  traj.config_fingerprint = detail::fingerprint("closed_form_regression", fed, cfg);
  RegressionOperators ops = make_regression_operators(fed);
  Vec w = detail::initial_model(cfg, fed.dim);
  detail::record(traj, w, 0, cfg, rounds);
  for (long k = 1; k <= rounds; ++k) {
    Vec pw = ops.apply_pbar(w);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = w[j] - pw[j] + ops.ybar[j];
    traj.diagnostics.emplace_back();
    detail::record(traj, w, k, cfg, rounds);
  }
  return traj;
}

// Parallel projection method: each round every node projects the incoming
// model onto its own margin set and the server averages the projections.
// The optional anchored schedule turns the iteration into one that converges
// to the projection of the initial point onto the intersection.
inline Trajectory ppm(const std::vector<MarginSet>& sets, const Vec& init, long rounds,
                      const std::optional<AlphaSchedule>& anchored = std::nullopt,
                      double tol = 1e-9, long record_every = 1) {
  if (sets.empty()) throw ConfigError("ppm needs at least one margin set");
  const std::size_t d = sets[0].dim();
  for (const auto& s : sets)
    if (s.dim() != d) throw DimensionError("ppm: margin set dim mismatch");
  if (anchored) detail::validate_schedule(*anchored);
  Vec w_init = init.empty() ? zeros(d) : init;
  if (w_init.size() != d) throw DimensionError("ppm: init has wrong dimension");

  Trajectory traj;
  {
    std::string s = "ppm|sets=" + std::to_string(sets.size()) + "|d=" + std::to_string(d) +
                    "|K=" + std::to_string(rounds) +
                    "|anchored=" + (anchored ? anchored->name : "no");
    traj.config_fingerprint = fnv1a64(s);
  }
  ProtocolConfig rec_cfg;
  rec_cfg.record_every = record_every;
  Vec w = w_init;
  detail::record(traj, w, 0, rec_cfg, rounds);
  const std::size_t M = sets.size();
  std::vector<Vec> warm(M);  // per-node dual warm starts across rounds
  for (std::size_t i = 0; i < M; ++i) warm[i] = zeros(sets[i].constraints());

  for (long k = 1; k <= rounds; ++k) {
    std::vector<ProjectionResult> proj(M);
    parallel_for(M, [&](std::size_t i) {
      proj[i] = margin_project(w, sets[i], tol, 0, &warm[i]);
    });
    std::vector<NodeDiag> diag(M);
    for (std::size_t i = 0; i < M; ++i) {
      if (proj[i].status != ProjectionStatus::converged)
        throw SolverError("ppm: node " + std::to_string(i) + " projection " +
                              (proj[i].status == ProjectionStatus::infeasible_suspected
                                   ? std::string("looks infeasible")
                                   : std::string("hit the iteration cap")) +
                              " at round " + std::to_string(k) + " (kkt residual " +
                              std::to_string(proj[i].kkt_residual) + ")",
                          static_cast<long>(i), k);
      warm[i] = proj[i].beta;
      diag[i] = {proj[i].iterations, proj[i].kkt_residual, false};
    }
    Vec mean = zeros(d);
    for (const auto& p : proj) axpy(1.0, p.w, mean);
    scale(mean, 1.0 / static_cast<double>(M));
    if (anchored) {
      const double a = anchored->alpha(k);
      w = zeros(d);
      axpy(1.0 - a, w_init, w);
      axpy(a, mean, w);
    } else {
      w = std::move(mean);
    }
    traj.diagnostics.push_back(std::move(diag));
    detail::record(traj, w, k, rec_cfg, rounds);
  }
  return traj;
}

// Minimum-norm interpolator of the pooled data; exists only in the globally
// overparameterized regime (d >= total samples with full row rank).
inline Vec centralized_min_norm(const FederatedDataset& fed) {
  NodeDataset pooled = stack_nodes(fed);
  return min_norm_interpolator(pooled.X, pooled.y);
}

// Plain GD on the pooled data (the centralized baseline the protocols are
// measured against).
inline Vec centralized_gd(const FederatedDataset& fed, const LossSpec& spec,
                          const LocalUpdateConfig& cfg) {
  NodeDataset pooled = stack_nodes(fed);
  try {
    return local_update(zeros(fed.dim), pooled, spec, cfg).w;
  } catch (const DivergedError& e) {
    throw DivergedError(std::string("centralized_gd: ") + e.what(), -1, -1, e.step);
  }
}

}  // namespace fedsim

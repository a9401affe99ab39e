#pragma once

// Named experiments reproducing the synthetic studies: regression round
// curves and dimension sweeps, classification round curves, SVM gaps,
// accuracy sweeps, and the heterogeneous Dirichlet split. Each experiment
// resolves to CSV tables (plus optional SVG plots) under an output
// directory, with a manifest recording the resolved spec and file checksums.
//
// Reproducibility contract: the same resolved spec produces byte-identical
// CSV/SVG files, independent of FEDSIM_THREADS. The manifest contains wall
// clock time and is exempt.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedsim/datagen.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/hash.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/projection.hpp"
#include "fedsim/protocols.hpp"
#include "fedsim/serialize.hpp"
#include "fedsim/svg.hpp"

namespace fedsim {

struct ExperimentSpec {
  std::string name;
  GenConfig gen;
  ProtocolConfig protocol;
  long centralized_steps = 10000;
  double centralized_eta = 1e-4;
  std::vector<double> sweep;       // dimension grid, or alpha grid for the Dirichlet study
  std::size_t pool_samples = 500;  // pooled samples before a Dirichlet split
  std::size_t test_per_node = 500;
  std::string out_dir = "out";
  bool plots = false;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "regression-rounds",       "regression-dim-sweep", "regression-generalization",
      "classification-rounds",   "classification-dim-sweep", "classification-svm-gap",
      "classification-accuracy", "dirichlet-classification",
  };
  return names;
}

inline std::string describe_experiment(const std::string& name) {
  if (name == "regression-rounds")
    return "squared loss: per-round gap between the averaged model, its closed form, and centralized GD";
  if (name == "regression-dim-sweep")
    return "squared loss: final gaps vs dimension (peak at the interpolation threshold)";
  if (name == "regression-generalization")
    return "squared loss: generalization error of averaged vs centralized model across dimension";
  if (name == "classification-rounds")
    return "exponential loss: per-round direction gaps to the centralized model and max-margin baseline";
  if (name == "classification-dim-sweep")
    return "exponential loss: final direction gaps to the centralized model across dimension";
  if (name == "classification-svm-gap")
    return "exponential loss: direction gaps to the hard-margin SVM across dimension";
  if (name == "classification-accuracy")
    return "exponential loss: held-out accuracy of all models across dimension";
  if (name == "dirichlet-classification")
    return "exponential loss under heterogeneous Dirichlet splits of pooled data";
  throw ConfigError("unknown experiment '" + name + "'");
}

inline ExperimentSpec default_spec(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  const std::vector<double> dim_grid = {100, 250, 500, 750, 1000, 1500};
  if (name == "regression-rounds" || name == "regression-dim-sweep" ||
      name == "regression-generalization") {
    s.gen = GenConfig{10, 50, 1500, 4.0, 1.0, 0.04, 42};
    s.protocol.rounds = 200;
    s.protocol.local = {200, 1e-4, 1e-12};
    s.centralized_steps = 10000;
    s.centralized_eta = 1e-4;
    if (name == "regression-rounds") {
      s.protocol.record_every = 1;
    } else {
      s.sweep = dim_grid;
      s.protocol.record_every = s.protocol.rounds;
    }
    return s;
  }
  if (name == "classification-rounds" || name == "classification-dim-sweep" ||
      name == "classification-svm-gap" || name == "classification-accuracy") {
    s.gen = GenConfig{10, 50, 1500, 4.0, 1.0, 1.0, 42};
    s.protocol.rounds = 120;
    s.protocol.local = {150, 1e-2, 1e-12};
    s.protocol.lambda = 1e-4;
    // The pooled objective sums ~10x more exponentials than one node's, so
    // the node step size blows it up; 1e-3 is the stable pooled equivalent.
    s.centralized_steps = 20000;
    s.centralized_eta = 1e-3;
    if (name == "classification-rounds") {
      s.protocol.record_every = 1;
    } else {
      s.protocol.record_every = s.protocol.rounds;
      // All classification sweeps start at d = total samples: below the
      // threshold the pooled set is almost surely not separable, and the
      // local step size is unstable for the summed exponential loss.
      s.sweep = {500, 750, 1000, 1500};
    }
    return s;
  }
  if (name == "dirichlet-classification") {
    s.gen = GenConfig{10, 50, 1500, 4.0, 1.0, 0.0, 42};  // pool is drawn from one w*
    s.protocol.rounds = 150;
    s.protocol.local = {150, 1e-2, 1e-12};
    s.protocol.lambda = 1e-4;
    s.protocol.record_every = 1;
    s.centralized_steps = 22500;
    s.centralized_eta = 1e-3;  // pooled-stable, as in the classification presets
    s.sweep = {0.5, 0.3};  // Dirichlet concentrations
    s.pool_samples = 500;
    return s;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

// -------- JSON config --------

inline nlohmann::json spec_to_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["experiment"] = s.name;
  j["seed"] = s.gen.seed;
  j["out"] = s.out_dir;
  j["plots"] = s.plots;
  j["gen"] = {{"nodes", s.gen.nodes},
              {"samples_per_node", s.gen.samples_per_node},
              {"dim", s.gen.dim},
              {"sigma2_wstar", s.gen.sigma2_wstar},
              {"sigma2_x", s.gen.sigma2_x},
              {"sigma2_noise", s.gen.sigma2_noise}};
  j["protocol"] = {{"rounds", s.protocol.rounds},
                   {"local_steps", s.protocol.local.steps},
                   {"eta", s.protocol.local.eta},
                   {"stop_grad_norm", s.protocol.local.stop_grad_norm},
                   {"lambda", s.protocol.lambda},
                   {"record_every", s.protocol.record_every}};
  j["centralized"] = {{"steps", s.centralized_steps}, {"eta", s.centralized_eta}};
  j["sweep"] = s.sweep;
  j["pool_samples"] = s.pool_samples;
  j["test_per_node"] = s.test_per_node;
  return j;
}

// Overrides fields of a default spec with whatever the JSON provides.
inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
  if (!j.contains("experiment")) throw ConfigError("config is missing 'experiment'");
  ExperimentSpec s = default_spec(j.at("experiment").get<std::string>());
  if (j.contains("seed")) s.gen.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out")) s.out_dir = j.at("out").get<std::string>();
  if (j.contains("plots")) s.plots = j.at("plots").get<bool>();
  if (j.contains("gen")) {
    const auto& g = j.at("gen");
    if (g.contains("nodes")) s.gen.nodes = g.at("nodes").get<std::size_t>();
    if (g.contains("samples_per_node"))
      s.gen.samples_per_node = g.at("samples_per_node").get<std::size_t>();
    if (g.contains("dim")) s.gen.dim = g.at("dim").get<std::size_t>();
    if (g.contains("sigma2_wstar")) s.gen.sigma2_wstar = g.at("sigma2_wstar").get<double>();
    if (g.contains("sigma2_x")) s.gen.sigma2_x = g.at("sigma2_x").get<double>();
    if (g.contains("sigma2_noise")) s.gen.sigma2_noise = g.at("sigma2_noise").get<double>();
  }
  if (j.contains("protocol")) {
    const auto& p = j.at("protocol");
    if (p.contains("rounds")) s.protocol.rounds = p.at("rounds").get<long>();
    if (p.contains("local_steps")) s.protocol.local.steps = p.at("local_steps").get<long>();
    if (p.contains("eta")) s.protocol.local.eta = p.at("eta").get<double>();
    if (p.contains("stop_grad_norm"))
      s.protocol.local.stop_grad_norm = p.at("stop_grad_norm").get<double>();
    if (p.contains("lambda")) s.protocol.lambda = p.at("lambda").get<double>();
    if (p.contains("record_every")) s.protocol.record_every = p.at("record_every").get<long>();
  }
  if (j.contains("centralized")) {
    const auto& c = j.at("centralized");
    if (c.contains("steps")) s.centralized_steps = c.at("steps").get<long>();
    if (c.contains("eta")) s.centralized_eta = c.at("eta").get<double>();
  }
  if (j.contains("sweep")) s.sweep = j.at("sweep").get<std::vector<double>>();
  if (j.contains("pool_samples")) s.pool_samples = j.at("pool_samples").get<std::size_t>();
  if (j.contains("test_per_node")) s.test_per_node = j.at("test_per_node").get<std::size_t>();
  return s;
}

struct RunManifest {
  std::string experiment;
  std::string out_dir;
  std::vector<std::string> files;  // relative to out_dir
  double wall_clock_seconds = 0.0;
  int partition_attempts = 0;
};

namespace detail {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

inline std::string file_stem(const std::string& experiment) {
  std::string s = experiment;
  for (char& c : s)
    if (c == '-') c = '_';
  return s;
}

// Collects output files, hashing rendered bytes for the manifest.
struct Emitter {
  const ExperimentSpec& spec;
  nlohmann::json outputs = nlohmann::json::array();
  std::vector<std::string> files;

  explicit Emitter(const ExperimentSpec& s) : spec(s) {
    std::filesystem::create_directories(spec.out_dir);
  }

  void raw(const std::string& file, const std::string& bytes) {
    const std::string path = spec.out_dir + "/" + file;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write to " + path);
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    outputs.push_back({{"file", file}, {"bytes", bytes.size()}, {"fnv1a64", hex}});
    files.push_back(file);
  }

  void table(const Table& t, const std::string& file) { raw(file, render_csv(t)); }

  void plot(const std::vector<PlotSeries>& series, const PlotSpec& ps, const std::string& file) {
    if (!spec.plots) return;
    // Render through a temp string by reusing the file writer.
    const std::string path = spec.out_dir + "/" + file;
    emit_svg_lineplot(series, ps, path);
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    outputs.push_back({{"file", file}, {"bytes", bytes.size()}, {"fnv1a64", hex}});
    files.push_back(file);
  }
};

inline PlotSeries series_from(const Table& t, std::size_t xcol, std::size_t ycol,
                              const std::string& label) {
  PlotSeries s;
  s.label = label;
  for (const auto& row : t.rows) {
    s.x.push_back(row[xcol]);
    s.y.push_back(row[ycol]);
  }
  return s;
}

inline LocalUpdateConfig centralized_cfg(const ExperimentSpec& s) {
  return {s.centralized_steps, s.centralized_eta, s.protocol.local.stop_grad_norm};
}

// -------- regression experiments --------

inline void run_regression_rounds(const ExperimentSpec& spec, Emitter& em) {
  const FederatedDataset fed = gen_regression(spec.gen);
  const Trajectory traj = local_gd(fed, spec.protocol);
  const Trajectory closed =
      closed_form_regression(fed, spec.protocol.rounds, spec.protocol.init,
                             spec.protocol.record_every);
  const Vec c = centralized_gd(fed, LossSpec::squared_loss(), centralized_cfg(spec));

  Table t;
  t.header = {"round", "diff_global_vs_centralized", "diff_global_vs_closedform"};
  for (std::size_t i = 0; i < traj.globals.size(); ++i)
    t.add_row({static_cast<double>(traj.round_indices[i]),
               scaled_diff(traj.globals[i], c),
               scaled_diff(traj.globals[i], closed.globals[i])});
  em.table(t, file_stem(spec.name) + ".csv");

  PlotSpec ps{"averaged model vs baselines (squared loss)", "round", "scaled difference", true};
  em.plot({series_from(t, 0, 1, "vs centralized"), series_from(t, 0, 2, "vs closed form")}, ps,
          file_stem(spec.name) + ".svg");
}

struct RegressionPoint {
  double diff_vs_centralized = kNan;
  double diff_vs_closedform = kNan;
  double diff_centralized_vs_minnorm = kNan;
  double gen_global = kNan;
  double gen_centralized = kNan;
};

inline RegressionPoint regression_point(const ExperimentSpec& spec, std::size_t d) {
  GenConfig g = spec.gen;
  g.dim = d;
  const FederatedDataset fed = gen_regression(g);
  ProtocolConfig pc = spec.protocol;
  pc.record_every = pc.rounds;  // final model only
  const Vec w_g = local_gd(fed, pc).final_model();
  const Vec w_closed =
      closed_form_regression(fed, pc.rounds, pc.init, pc.rounds).final_model();
  const Vec w_c = centralized_gd(fed, LossSpec::squared_loss(), centralized_cfg(spec));
  RegressionPoint pt;
  pt.diff_vs_centralized = scaled_diff(w_g, w_c);
  pt.diff_vs_closedform = scaled_diff(w_g, w_closed);
  try {
    pt.diff_centralized_vs_minnorm = scaled_diff(w_c, centralized_min_norm(fed));
  } catch (const Error&) {
    // below the interpolation threshold the pooled min-norm model does not exist
  }
  pt.gen_global = generalization_error(w_g, fed);
  pt.gen_centralized = generalization_error(w_c, fed);
  return pt;
}

inline void run_regression_dim_sweep(const ExperimentSpec& spec, Emitter& em) {
  Table t;
  t.header = {"d", "diff_global_vs_centralized", "diff_global_vs_closedform",
              "diff_centralized_vs_closedform"};
  for (double d : spec.sweep) {
    const RegressionPoint pt = regression_point(spec, static_cast<std::size_t>(d));
    t.add_row({d, pt.diff_vs_centralized, pt.diff_vs_closedform,
               pt.diff_centralized_vs_minnorm});
  }
  em.table(t, file_stem(spec.name) + ".csv");
  PlotSpec ps{"final gaps vs dimension (squared loss)", "d", "scaled difference", true};
  em.plot({series_from(t, 0, 1, "global vs centralized"),
           series_from(t, 0, 2, "global vs closed form"),
           series_from(t, 0, 3, "centralized vs min-norm")},
          ps, file_stem(spec.name) + ".svg");
}

inline void run_regression_generalization(const ExperimentSpec& spec, Emitter& em) {
  Table t;
  t.header = {"d", "gen_error_global", "gen_error_centralized"};
  for (double d : spec.sweep) {
    const RegressionPoint pt = regression_point(spec, static_cast<std::size_t>(d));
    t.add_row({d, pt.gen_global, pt.gen_centralized});
  }
  em.table(t, file_stem(spec.name) + ".csv");
  PlotSpec ps{"generalization error vs dimension (squared loss)", "d", "error", false};
  em.plot({series_from(t, 0, 1, "averaged model"), series_from(t, 0, 2, "centralized")}, ps,
          file_stem(spec.name) + ".svg");
}

// -------- classification experiments --------

struct ClassificationModels {
  Trajectory global;
  Trajectory modified;
  Vec centralized;
  Vec svm;
  bool svm_ok = false;
};

inline ClassificationModels classification_models(const FederatedDataset& fed,
                                                  const ExperimentSpec& spec, bool need_svm) {
  ClassificationModels m;
  m.global = local_gd(fed, spec.protocol);
  m.modified = modified_local_gd(fed, spec.protocol);
  m.centralized =
      centralized_gd(fed, LossSpec::exp_loss(spec.protocol.lambda), centralized_cfg(spec));
  if (need_svm) {
    std::vector<MarginSet> sets;
    sets.reserve(fed.node_count());
    for (const auto& node : fed.nodes) sets.push_back(MarginSet::from_node(node));
    const ProjectionResult svm = hard_margin_svm(sets);
    m.svm_ok = svm.status == ProjectionStatus::converged;
    if (m.svm_ok) m.svm = svm.w;
  }
  return m;
}

inline void run_classification_rounds(const ExperimentSpec& spec, Emitter& em) {
  const FederatedDataset fed = gen_classification(spec.gen);
  const ClassificationModels m = classification_models(fed, spec, true);
  const double dd_c_svm =
      m.svm_ok ? directional_diff(m.centralized, m.svm) : kNan;
  Table t;
  t.header = {"round", "dd_global_vs_centralized", "dd_modified_vs_centralized",
              "dd_centralized_vs_svm"};
  for (std::size_t i = 0; i < m.global.globals.size(); ++i) {
    if (m.global.round_indices[i] == 0) continue;  // the zero init has no direction
    t.add_row({static_cast<double>(m.global.round_indices[i]),
               directional_diff(m.global.globals[i], m.centralized),
               directional_diff(m.modified.globals[i], m.centralized), dd_c_svm});
  }
  em.table(t, file_stem(spec.name) + ".csv");
  PlotSpec ps{"direction gaps per round (exponential loss)", "round", "directional difference",
              false};
  em.plot({series_from(t, 0, 1, "averaged vs centralized"),
           series_from(t, 0, 2, "anchored vs centralized"),
           series_from(t, 0, 3, "centralized vs SVM")},
          ps, file_stem(spec.name) + ".svg");
}

struct ClassificationPoint {
  double dd_g_c = kNan, dd_m_c = kNan;
  double dd_g_svm = kNan, dd_m_svm = kNan, dd_c_svm = kNan;
  double acc_g = kNan, acc_m = kNan, acc_c = kNan, acc_svm = kNan;
};

inline ClassificationPoint classification_point(const ExperimentSpec& spec, std::size_t d,
                                                bool need_svm, bool need_accuracy) {
  GenConfig g = spec.gen;
  g.dim = d;
  const FederatedDataset fed = gen_classification(g);
  ExperimentSpec local = spec;
  local.protocol.record_every = local.protocol.rounds;
  const ClassificationModels m = classification_models(fed, local, need_svm);
  ClassificationPoint pt;
  pt.dd_g_c = directional_diff(m.global.final_model(), m.centralized);
  pt.dd_m_c = directional_diff(m.modified.final_model(), m.centralized);
  if (m.svm_ok) {
    pt.dd_g_svm = directional_diff(m.global.final_model(), m.svm);
    pt.dd_m_svm = directional_diff(m.modified.final_model(), m.svm);
    pt.dd_c_svm = directional_diff(m.centralized, m.svm);
  }
  if (need_accuracy) {
    const FederatedDataset test = gen_test_like(fed, g, spec.test_per_node);
    pt.acc_g = accuracy(m.global.final_model(), test);
    pt.acc_m = accuracy(m.modified.final_model(), test);
    pt.acc_c = accuracy(m.centralized, test);
    if (m.svm_ok) pt.acc_svm = accuracy(m.svm, test);
  }
  return pt;
}

inline void run_classification_dim_sweep(const ExperimentSpec& spec, Emitter& em) {
  Table t;
  t.header = {"d", "dd_global_vs_centralized", "dd_modified_vs_centralized"};
  for (double d : spec.sweep) {
    const auto pt = classification_point(spec, static_cast<std::size_t>(d), false, false);
    t.add_row({d, pt.dd_g_c, pt.dd_m_c});
  }
  em.table(t, file_stem(spec.name) + ".csv");
  PlotSpec ps{"direction gap to centralized vs dimension", "d", "directional difference", false};
  em.plot({series_from(t, 0, 1, "averaged"), series_from(t, 0, 2, "anchored")}, ps,
          file_stem(spec.name) + ".svg");
}

inline void run_classification_svm_gap(const ExperimentSpec& spec, Emitter& em) {
  Table t;
  t.header = {"d", "dd_global_vs_svm", "dd_modified_vs_svm", "dd_centralized_vs_svm"};
  for (double d : spec.sweep) {
    const auto pt = classification_point(spec, static_cast<std::size_t>(d), true, false);
    t.add_row({d, pt.dd_g_svm, pt.dd_m_svm, pt.dd_c_svm});
  }
  em.table(t, file_stem(spec.name) + ".csv");
  PlotSpec ps{"direction gap to the hard-margin SVM vs dimension", "d",
              "directional difference", false};
  em.plot({series_from(t, 0, 1, "averaged"), series_from(t, 0, 2, "anchored"),
           series_from(t, 0, 3, "centralized")},
          ps, file_stem(spec.name) + ".svg");
}

inline void run_classification_accuracy(const ExperimentSpec& spec, Emitter& em) {
  Table t;
  t.header = {"d", "acc_global", "acc_modified", "acc_centralized", "acc_svm"};
  for (double d : spec.sweep) {
    const auto pt = classification_point(spec, static_cast<std::size_t>(d), true, true);
    t.add_row({d, pt.acc_g, pt.acc_m, pt.acc_c, pt.acc_svm});
  }
  em.table(t, file_stem(spec.name) + ".csv");
  PlotSpec ps{"held-out accuracy vs dimension", "d", "accuracy", false};
  em.plot({series_from(t, 0, 1, "averaged"), series_from(t, 0, 2, "anchored"),
           series_from(t, 0, 3, "centralized"), series_from(t, 0, 4, "SVM")},
          ps, file_stem(spec.name) + ".svg");
}

// -------- Dirichlet split --------

// Empty nodes are a legitimate outcome of a skewed split; retry with a
// seed derived deterministically from (seed, attempt).
inline FederatedDataset partition_with_retries(const NodeDataset& pool, std::size_t nodes,
                                               double alpha, std::uint64_t seed, int& attempts) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const std::uint64_t s =
        attempt == 0 ? seed : mix64(seed ^ (0xD1B54A32D192ED03ull * static_cast<unsigned>(attempt)));
    try {
      FederatedDataset fed = dirichlet_partition(pool, nodes, alpha, s);
      attempts = attempt + 1;
      return fed;
    } catch (const EmptyNodeError&) {
      continue;
    }
  }
  throw EmptyNodeError("dirichlet split kept producing empty nodes after 64 attempts");
}

inline void run_dirichlet_classification(const ExperimentSpec& spec, Emitter& em,
                                         int& partition_attempts) {
  // Pool drawn from a single ground truth, then split across nodes.
  GenConfig pool_cfg = spec.gen;
  pool_cfg.nodes = 1;
  pool_cfg.samples_per_node = spec.pool_samples;
  pool_cfg.sigma2_noise = 0.0;
  const FederatedDataset pool_fed = gen_classification(pool_cfg);
  const NodeDataset pool = stack_nodes(pool_fed);

  Table rounds_t;
  rounds_t.header = {"alpha", "round", "dd_global_vs_centralized", "dd_modified_vs_centralized"};
  Table acc_t;
  acc_t.header = {"alpha", "acc_global", "acc_modified", "acc_centralized", "acc_svm"};

  partition_attempts = 0;
  for (double alpha : spec.sweep) {
    int attempts = 0;
    const FederatedDataset fed =
        partition_with_retries(pool, spec.gen.nodes, alpha, spec.gen.seed, attempts);
    partition_attempts += attempts;
    const ClassificationModels m = classification_models(fed, spec, true);
    for (std::size_t i = 0; i < m.global.globals.size(); ++i) {
      if (m.global.round_indices[i] == 0) continue;
      rounds_t.add_row({alpha, static_cast<double>(m.global.round_indices[i]),
                        directional_diff(m.global.globals[i], m.centralized),
                        directional_diff(m.modified.globals[i], m.centralized)});
    }
    GenConfig test_cfg = spec.gen;
    test_cfg.samples_per_node = spec.test_per_node;
    const FederatedDataset test = gen_test_like(fed, test_cfg, spec.test_per_node);
    acc_t.add_row({alpha, accuracy(m.global.final_model(), test),
                   accuracy(m.modified.final_model(), test),
                   accuracy(m.centralized, test),
                   m.svm_ok ? accuracy(m.svm, test) : kNan});
  }
  em.table(rounds_t, file_stem(spec.name) + "_rounds.csv");
  em.table(acc_t, file_stem(spec.name) + "_accuracy.csv");

  std::vector<PlotSeries> series;
  for (double alpha : spec.sweep) {
    PlotSeries g{"alpha=" + std::to_string(alpha).substr(0, 4) + " averaged", {}, {}};
    PlotSeries mm{"alpha=" + std::to_string(alpha).substr(0, 4) + " anchored", {}, {}};
    for (const auto& row : rounds_t.rows) {
      if (row[0] != alpha) continue;
      g.x.push_back(row[1]);
      g.y.push_back(row[2]);
      mm.x.push_back(row[1]);
      mm.y.push_back(row[3]);
    }
    series.push_back(std::move(g));
    series.push_back(std::move(mm));
  }
  PlotSpec ps{"direction gap to centralized under Dirichlet splits", "round",
              "directional difference", false};
  em.plot(series, ps, file_stem(spec.name) + ".svg");
}

}  // namespace detail

// Runs one named experiment, writing CSVs (and SVGs when spec.plots) plus a
// manifest.json into spec.out_dir.
inline RunManifest run_experiment(const ExperimentSpec& spec) {
  if (std::find(experiment_names().begin(), experiment_names().end(), spec.name) ==
      experiment_names().end())
    throw ConfigError("unknown experiment '" + spec.name + "'");

  detail::Emitter em(spec);
  RunManifest man;
  man.experiment = spec.name;
  man.out_dir = spec.out_dir;

  // Written up front so an aborted run leaves a traceable state behind.
  const std::string manifest_path = spec.out_dir + "/manifest.json";
  {
    nlohmann::json j;
    j["experiment"] = spec.name;
    j["status"] = "running";
    j["spec"] = spec_to_json(spec);
    std::ofstream os(manifest_path, std::ios::binary);
    if (!os) throw IoError("cannot open " + manifest_path + " for writing");
    os << j.dump(2) << "\n";
  }

  const auto t0 = std::chrono::steady_clock::now();
  int partition_attempts = 0;
  if (spec.name == "regression-rounds") detail::run_regression_rounds(spec, em);
  else if (spec.name == "regression-dim-sweep") detail::run_regression_dim_sweep(spec, em);
  else if (spec.name == "regression-generalization")
    detail::run_regression_generalization(spec, em);
  else if (spec.name == "classification-rounds") detail::run_classification_rounds(spec, em);
  else if (spec.name == "classification-dim-sweep")
    detail::run_classification_dim_sweep(spec, em);
  else if (spec.name == "classification-svm-gap") detail::run_classification_svm_gap(spec, em);
  else if (spec.name == "classification-accuracy")
    detail::run_classification_accuracy(spec, em);
  else if (spec.name == "dirichlet-classification")
    detail::run_dirichlet_classification(spec, em, partition_attempts);
  const auto t1 = std::chrono::steady_clock::now();

  man.files = em.files;
  man.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
  man.partition_attempts = partition_attempts;

  nlohmann::json j;
  j["experiment"] = spec.name;
  j["status"] = "completed";
  j["spec"] = spec_to_json(spec);
  j["wall_clock_seconds"] = man.wall_clock_seconds;
  if (spec.name == "dirichlet-classification") j["partition_attempts"] = man.partition_attempts;
  j["outputs"] = em.outputs;
  std::ofstream os(manifest_path, std::ios::binary);
  if (!os) throw IoError("cannot open " + manifest_path + " for writing");
  os << j.dump(2) << "\n";
  return man;
}

}  // namespace fedsim

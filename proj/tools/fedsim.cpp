// Command-line front end: run named experiments, list them, or run the
// built-in invariant suite.
//
//   fedsim run --experiment regression-rounds --out out/reg
//   fedsim run --config my_config.json --plots
//   fedsim list
//   fedsim verify

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fedsim/experiments.hpp"
#include "fedsim/selfcheck.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& experiment,
            std::optional<std::uint64_t> seed, std::optional<std::string> out,
            std::optional<std::size_t> d, std::optional<long> rounds,
            std::optional<long> local_steps, std::optional<double> eta,
            std::optional<double> lambda, std::optional<double> alpha, bool plots) {
  fedsim::ExperimentSpec spec;
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) {
      std::fprintf(stderr, "error: cannot open config '%s'\n", config_path.c_str());
      return 2;
    }
    nlohmann::json j;
    try {
      is >> j;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: bad JSON in '%s': %s\n", config_path.c_str(), e.what());
      return 2;
    }
    if (!experiment.empty()) j["experiment"] = experiment;
    spec = fedsim::spec_from_json(j);
  } else {
    spec = fedsim::default_spec(experiment);
  }

  if (seed) spec.gen.seed = *seed;
  if (out) spec.out_dir = *out;
  if (plots) spec.plots = true;
  if (rounds) spec.protocol.rounds = *rounds;
  if (local_steps) spec.protocol.local.steps = *local_steps;
  if (eta) spec.protocol.local.eta = *eta;
  if (lambda) spec.protocol.lambda = *lambda;
  if (d) {
    spec.gen.dim = *d;
    // On a dimension sweep the flag pins the grid to this single value.
    if (!spec.sweep.empty() && spec.name != "dirichlet-classification")
      spec.sweep = {static_cast<double>(*d)};
  }
  if (alpha) {
    if (spec.name != "dirichlet-classification") {
      std::fprintf(stderr, "error: --alpha only applies to dirichlet-classification\n");
      return 2;
    }
    spec.sweep = {*alpha};
  }

  const fedsim::RunManifest man = fedsim::run_experiment(spec);
  std::printf("experiment %s finished in %.1f s\n", man.experiment.c_str(),
              man.wall_clock_seconds);
  for (const auto& f : man.files) std::printf("  wrote %s/%s\n", man.out_dir.c_str(), f.c_str());
  std::printf("  wrote %s/manifest.json\n", man.out_dir.c_str());
  return 0;
}

int cmd_list() {
  std::printf("available experiments:\n");
  for (const auto& name : fedsim::experiment_names()) {
    const fedsim::ExperimentSpec s = fedsim::default_spec(name);
    std::printf("  %-26s %s\n", name.c_str(), fedsim::describe_experiment(name).c_str());
    std::printf("  %-26s defaults: M=%zu N=%zu d=%zu rounds=%ld L=%ld eta=%g seed=%llu\n", "",
                s.gen.nodes, s.gen.samples_per_node, s.gen.dim, s.protocol.rounds,
                s.protocol.local.steps, s.protocol.local.eta,
                static_cast<unsigned long long>(s.gen.seed));
  }
  return 0;
}

int cmd_verify() {
  const auto results = fedsim::run_verify_suite();
  int failures = 0;
  for (const auto& r : results) {
    std::printf("[%s] %s (%s)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    failures += r.pass ? 0 : 1;
  }
  std::printf("%zu checks, %d failed\n", results.size(), failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulator for local gradient descent on overparameterized linear models"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a named experiment");
  std::string experiment, config_path;
  std::string out_s;
  std::uint64_t seed_v = 0;
  std::size_t d_v = 0;
  long rounds_v = 0, local_steps_v = 0;
  double eta_v = 0, lambda_v = 0, alpha_v = 0;
  bool plots = false;
  run->add_option("--experiment,-e", experiment, "experiment name (see `fedsim list`)");
  run->add_option("--config", config_path, "JSON config file (overridden by flags)");
  auto* opt_seed = run->add_option("--seed", seed_v, "master RNG seed");
  auto* opt_out = run->add_option("--out", out_s, "output directory");
  auto* opt_d = run->add_option("--d", d_v, "model dimension (pins sweep grids to one value)");
  auto* opt_rounds = run->add_option("--rounds", rounds_v, "communication rounds");
  auto* opt_ls = run->add_option("--local-steps", local_steps_v, "local GD steps per round");
  auto* opt_eta = run->add_option("--eta", eta_v, "local GD step size");
  auto* opt_lambda = run->add_option("--lambda", lambda_v, "exp-loss regularization weight");
  auto* opt_alpha = run->add_option("--alpha", alpha_v, "Dirichlet concentration");
  run->add_flag("--plots", plots, "also emit SVG plots");

  auto* list = app.add_subcommand("list", "list experiments and their defaults");
  auto* verify = app.add_subcommand("verify", "run the built-in invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) return cmd_list();
    if (verify->parsed()) return cmd_verify();
    if (run->parsed()) {
      if (config_path.empty() && experiment.empty()) {
        std::fprintf(stderr, "error: provide --experiment or --config\n");
        return 2;
      }
      auto opt = [](CLI::Option* o) { return o->count() > 0; };
      return cmd_run(config_path, experiment, opt(opt_seed) ? std::optional(seed_v) : std::nullopt,
                     opt(opt_out) ? std::optional(out_s) : std::nullopt,
                     opt(opt_d) ? std::optional(d_v) : std::nullopt,
                     opt(opt_rounds) ? std::optional(rounds_v) : std::nullopt,
                     opt(opt_ls) ? std::optional(local_steps_v) : std::nullopt,
                     opt(opt_eta) ? std::optional(eta_v) : std::nullopt,
                     opt(opt_lambda) ? std::optional(lambda_v) : std::nullopt,
                     opt(opt_alpha) ? std::optional(alpha_v) : std::nullopt, plots);
    }
  } catch (const fedsim::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "fedsim/experiments.hpp"
#include "fedsim/selfcheck.hpp"

using namespace fedsim;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}
struct TempDir {
  std::filesystem::path p;
  explicit TempDir(const char* tag)
      : p(std::filesystem::temp_directory_path() / ("fedsim_test_" + std::string(tag))) {
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
  }
  ~TempDir() { std::filesystem::remove_all(p); }
  std::string dir(const std::string& name) const { return (p / name).string(); }
};

// Shrinks an experiment enough for a unit test while keeping its shape.
ExperimentSpec tiny(const std::string& name, const std::string& out) {
  ExperimentSpec s = default_spec(name);
  s.gen.nodes = 3;
  s.gen.samples_per_node = 5;
  s.gen.dim = 40;
  s.protocol.rounds = 6;
  s.protocol.local.steps = 30;
  if (!s.sweep.empty() && name != "dirichlet-classification") s.sweep = {30, 40};
  s.centralized_steps = 300;
  s.test_per_node = 20;
  s.pool_samples = 60;
  s.out_dir = out;
  return s;
}
}  // namespace

TEST_CASE("every default spec is registered and self-consistent", "[harness]") {
  for (const auto& name : experiment_names()) {
    const ExperimentSpec s = default_spec(name);
    CHECK(s.name == name);
    CHECK_FALSE(describe_experiment(name).empty());
    // JSON round trip preserves the resolved spec
    const ExperimentSpec back = spec_from_json(spec_to_json(s));
    CHECK(back.gen.dim == s.gen.dim);
    CHECK(back.protocol.rounds == s.protocol.rounds);
    CHECK(back.sweep == s.sweep);
  }
  CHECK_THROWS_AS(default_spec("no-such-experiment"), ConfigError);
}

TEST_CASE("json overrides only the provided fields", "[harness]") {
  nlohmann::json j;
  j["experiment"] = "regression-rounds";
  j["seed"] = 7;
  j["protocol"] = {{"rounds", 11}};
  const ExperimentSpec s = spec_from_json(j);
  CHECK(s.gen.seed == 7);
  CHECK(s.protocol.rounds == 11);
  CHECK(s.protocol.local.steps == 200);  // untouched default
  CHECK(s.gen.dim == 1500);
}

TEST_CASE("a scaled-down regression experiment emits csv and manifest", "[harness]") {
  TempDir tmp("reg");
  ExperimentSpec s = tiny("regression-rounds", tmp.dir("out"));
  s.plots = true;
  const RunManifest man = run_experiment(s);
  REQUIRE_FALSE(man.files.empty());
  const std::string csv = slurp(tmp.dir("out") + "/regression_rounds.csv");
  CHECK(csv.rfind("round,diff_global_vs_centralized,diff_global_vs_closedform\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 7);  // rounds 0..6
  const std::string manifest = slurp(tmp.dir("out") + "/manifest.json");
  const auto j = nlohmann::json::parse(manifest);
  CHECK(j.at("status") == "completed");
  CHECK(j.at("outputs").size() == man.files.size());
  // the svg was actually produced
  CHECK(std::filesystem::exists(tmp.dir("out") + "/regression_rounds.svg"));
}

TEST_CASE("identical specs give byte-identical csv, thread count included", "[harness]") {
  TempDir tmp("det");
  ExperimentSpec s = tiny("classification-rounds", tmp.dir("a"));
  const unsigned before = thread_count();
  set_threads(1);
  run_experiment(s);
  const std::string a = slurp(tmp.dir("a") + "/classification_rounds.csv");
  s.out_dir = tmp.dir("b");
  set_threads(4);
  run_experiment(s);
  set_threads(before);
  const std::string b = slurp(tmp.dir("b") + "/classification_rounds.csv");
  CHECK(a == b);
}

TEST_CASE("dirichlet experiment writes both tables and retries as needed", "[harness]") {
  TempDir tmp("dir");
  ExperimentSpec s = tiny("dirichlet-classification", tmp.dir("out"));
  s.sweep = {0.5};
  const RunManifest man = run_experiment(s);
  CHECK(man.partition_attempts >= 1);
  const std::string rounds = slurp(tmp.dir("out") + "/dirichlet_classification_rounds.csv");
  CHECK(rounds.rfind("alpha,round,", 0) == 0);
  const std::string acc = slurp(tmp.dir("out") + "/dirichlet_classification_accuracy.csv");
  CHECK(acc.rfind("alpha,acc_global,acc_modified,acc_centralized,acc_svm\n", 0) == 0);
  CHECK(std::count(acc.begin(), acc.end(), '\n') == 2);
}

TEST_CASE("the verify suite passes", "[harness]") {
  for (const auto& r : run_verify_suite()) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }
}

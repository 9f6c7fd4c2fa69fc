#include <doctest.h>

#include <dmdlab/errors.hpp>
#include <dmdlab/experiment.hpp>
#include <dmdlab/snapshots.hpp>

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using dmdlab::BoundsSuiteOptions;
using dmdlab::ExperimentConfig;
using dmdlab::SnapshotSet;
using dmdlab::SolverKind;
using dmdlab::Strategy;
using dmdlab::TimeGrid;

namespace fs = std::filesystem;

namespace {

// Scratch area for config files and experiment artifacts; wiped per run so
// repeated invocations start clean.
fs::path scratch_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "dmdlab_experiment_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = scratch_root() / name;
  fs::create_directories(p);
  return p;
}

std::string write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
  out.close();
  return path.string();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// A small, fully valid configuration to perturb in the validation tests.
ExperimentConfig baseline_config() {
  ExperimentConfig cfg;
  cfg.solver = SolverKind::linear;
  cfg.linear_x0 = Eigen::Vector2d(1.0, 0.0);
  cfg.linear_dt = 0.01;
  cfg.linear_t_final = 1.0;
  cfg.strategies = {Strategy::standard};
  cfg.eps = 1e-6;
  cfg.train_t_final = 0.5;
  cfg.predict_t_final = 1.0;
  cfg.output_dir = scratch_dir("baseline").string();
  return cfg;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("relative error against a reference state") {
  Eigen::VectorXd truth(2);
  truth << 3.0, 4.0;  // norm 5

  CHECK(dmdlab::relative_error(truth, truth) == doctest::Approx(0.0));
  CHECK(dmdlab::relative_error(2.0 * truth, truth) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::VectorXd off = truth;
  off(0) += 0.5;
  CHECK(dmdlab::relative_error(off, truth) == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(dmdlab::relative_error(Eigen::VectorXd::Ones(3), truth),
                  dmdlab::IndexError);
  CHECK_THROWS_AS(dmdlab::relative_error(truth, Eigen::VectorXd::Zero(2)),
                  dmdlab::DegenerateReference);
}

TEST_CASE("strategy names round trip") {
  for (Strategy s : {Strategy::standard, Strategy::time_varying, Strategy::lagrangian,
                     Strategy::lagrangian_time_varying})
    CHECK(dmdlab::parse_strategy(dmdlab::strategy_name(s)) == s);
  CHECK_THROWS_AS(dmdlab::parse_strategy("koopman"), dmdlab::ConfigError);
}

TEST_CASE("config validation rejects unusable settings") {
  CHECK_NOTHROW(baseline_config().validate());

  auto cfg = baseline_config();
  cfg.eps = 0.0;
  CHECK_THROWS_AS(cfg.validate(), dmdlab::ConfigError);
  cfg.eps = 1.0;
  CHECK_THROWS_AS(cfg.validate(), dmdlab::ConfigError);

  cfg = baseline_config();
  cfg.strategies.clear();
  CHECK_THROWS_AS(cfg.validate(), dmdlab::ConfigError);

  cfg = baseline_config();
  cfg.strategies = {Strategy::time_varying};
  cfg.window = 1;
  CHECK_THROWS_AS(cfg.validate(), dmdlab::ConfigError);

  // Moving-frame strategies need a spatial grid to move.
  cfg = baseline_config();
  cfg.strategies = {Strategy::lagrangian};
  CHECK_THROWS_AS(cfg.validate(), dmdlab::ConfigError);

  cfg = baseline_config();
  cfg.output_dir.clear();
  CHECK_THROWS_AS(cfg.validate(), dmdlab::ConfigError);

  cfg = baseline_config();
  cfg.train_t_final = 0.0;
  CHECK_THROWS_AS(cfg.validate(), dmdlab::ConfigError);

  cfg = baseline_config();
  cfg.predict_t_final = -1.0;
  CHECK_THROWS_AS(cfg.validate(), dmdlab::ConfigError);
}

TEST_CASE("config files parse into full configurations") {
  const fs::path dir = scratch_dir("configs");

  SUBCASE("a complete linear-system config") {
    const std::string path = write_text(dir / "linear.json", R"({
      "name": "demo",
      "solver": {"type": "linear", "epsilon": 0.05, "x0": [1.0, 0.5],
                 "dt": 0.001, "t_final": 1.0},
      "strategies": ["standard", "time_varying"],
      "eps": 1e-6,
      "window": 10,
      "train_span": [0.0, 0.5],
      "predict_span": [0.0, 1.0],
      "seed": 7,
      "output_dir": "out"
    })");
    auto cfg = dmdlab::load_experiment_config(path);
    CHECK(cfg.name == "demo");
    CHECK(cfg.solver == SolverKind::linear);
    CHECK(cfg.linear_epsilon == doctest::Approx(0.05));
    CHECK(cfg.linear_dt == doctest::Approx(0.001));
    REQUIRE(cfg.linear_x0.size() == 2);
    CHECK(cfg.linear_x0(1) == doctest::Approx(0.5));
    REQUIRE(cfg.strategies.size() == 2);
    CHECK(cfg.strategies[0] == Strategy::standard);
    CHECK(cfg.strategies[1] == Strategy::time_varying);
    CHECK(cfg.eps == doctest::Approx(1e-6));
    CHECK(cfg.window == 10);
    CHECK(cfg.train_t_final == doctest::Approx(0.5));
    CHECK(cfg.predict_t_final == doctest::Approx(1.0));
    CHECK(cfg.seed == 7);
    CHECK(cfg.output_dir == "out");
  }

  SUBCASE("the singular 'strategy' spelling works too") {
    const std::string path = write_text(dir / "single.json", R"({
      "solver": {"type": "advection1d", "t_final": 2.0},
      "strategy": "standard",
      "eps": 1e-6,
      "train_span": [0.0, 1.0],
      "predict_span": [0.0, 2.0]
    })");
    auto cfg = dmdlab::load_experiment_config(path);
    CHECK(cfg.solver == SolverKind::advection1d);
    REQUIRE(cfg.strategies.size() == 1);
    CHECK(cfg.strategies[0] == Strategy::standard);
    CHECK(cfg.advection.t_final == doctest::Approx(2.0));
  }

  SUBCASE("unknown keys are rejected, not ignored") {
    const std::string root_typo = write_text(dir / "root_typo.json", R"({
      "solver": {"type": "linear"},
      "strategy": "standard",
      "eps": 1e-6,
      "widnow": 10,
      "train_span": [0.0, 0.5],
      "predict_span": [0.0, 1.0]
    })");
    CHECK_THROWS_WITH_AS(dmdlab::load_experiment_config(root_typo),
                         doctest::Contains("unknown key"), dmdlab::ConfigError);

    const std::string solver_typo = write_text(dir / "solver_typo.json", R"({
      "solver": {"type": "linear", "velocity": 2.0},
      "strategy": "standard",
      "eps": 1e-6,
      "train_span": [0.0, 0.5],
      "predict_span": [0.0, 1.0]
    })");
    CHECK_THROWS_AS(dmdlab::load_experiment_config(solver_typo), dmdlab::ConfigError);
  }

  SUBCASE("malformed inputs fail loudly") {
    CHECK_THROWS_AS(dmdlab::load_experiment_config((dir / "missing.json").string()),
                    dmdlab::ConfigError);

    const std::string broken = write_text(dir / "broken.json", "{nope");
    CHECK_THROWS_AS(dmdlab::load_experiment_config(broken), dmdlab::ConfigError);

    const std::string no_eps = write_text(dir / "no_eps.json", R"({
      "solver": {"type": "linear"},
      "strategy": "standard",
      "train_span": [0.0, 0.5],
      "predict_span": [0.0, 1.0]
    })");
    CHECK_THROWS_AS(dmdlab::load_experiment_config(no_eps), dmdlab::ConfigError);

    const std::string bad_span = write_text(dir / "bad_span.json", R"({
      "solver": {"type": "linear"},
      "strategy": "standard",
      "eps": 1e-6,
      "train_span": 0.5,
      "predict_span": [0.0, 1.0]
    })");
    CHECK_THROWS_WITH_AS(dmdlab::load_experiment_config(bad_span),
                         doctest::Contains("pair"), dmdlab::ConfigError);

    const std::string no_strategy = write_text(dir / "no_strategy.json", R"({
      "solver": {"type": "linear"},
      "eps": 1e-6,
      "train_span": [0.0, 0.5],
      "predict_span": [0.0, 1.0]
    })");
    CHECK_THROWS_AS(dmdlab::load_experiment_config(no_strategy), dmdlab::ConfigError);

    const std::string bad_solver = write_text(dir / "bad_solver.json", R"({
      "solver": {"type": "spectral"},
      "strategy": "standard",
      "eps": 1e-6,
      "train_span": [0.0, 0.5],
      "predict_span": [0.0, 1.0]
    })");
    CHECK_THROWS_WITH_AS(dmdlab::load_experiment_config(bad_solver),
                         doctest::Contains("solver type"), dmdlab::ConfigError);
  }
}

TEST_CASE("solver dispatch and geometry") {
  auto cfg = baseline_config();

  SUBCASE("the dense linear system uses the rotating coefficients") {
    auto s = dmdlab::run_solver(cfg);
    CHECK(s.dim() == 2);
    CHECK(s.count() == 101);
    CHECK_FALSE(dmdlab::solver_geometry(cfg).has_value());

    // Without an explicit start state the solver begins at (1, 0).
    auto defaulted = cfg;
    defaulted.linear_x0 = Eigen::VectorXd();
    auto s2 = dmdlab::run_solver(defaulted);
    CHECK(s2.state(0)(0) == doctest::Approx(1.0));
    CHECK(s2.state(0)(1) == doctest::Approx(0.0));
  }

  SUBCASE("snapshot files round trip through the file solver") {
    Eigen::MatrixXd states(3, 4);
    states << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
    SnapshotSet original(TimeGrid{0.0, 0.25, 4}, states);
    const fs::path file = scratch_dir("io") / "traj.bin";
    dmdlab::save_snapshots(original, file.string());

    auto file_cfg = baseline_config();
    file_cfg.solver = SolverKind::file;
    file_cfg.snapshot_file = file.string();
    auto loaded = dmdlab::run_solver(file_cfg);
    CHECK(loaded.dim() == 3);
    CHECK(loaded.count() == 4);
    CHECK((loaded.states() - states).norm() == 0.0);
    CHECK_FALSE(dmdlab::solver_geometry(file_cfg).has_value());
  }
}

TEST_CASE("experiment pipeline writes coherent artifacts") {
  auto cfg = baseline_config();
  cfg.name = "pipeline";
  cfg.strategies = {Strategy::standard, Strategy::time_varying};
  cfg.eps = 1e-8;
  cfg.window = 10;
  cfg.output_dir = scratch_dir("pipeline").string();

  auto result = dmdlab::run_experiment(cfg);
  REQUIRE(result.results.size() == 2);
  CHECK(result.truth.count() == 101);

  const fs::path out(cfg.output_dir);
  for (const char* base :
       {"errors_standard.csv", "spectrum_standard.csv", "model_standard.csv",
        "errors_time_varying.csv", "spectrum_time_varying.csv",
        "model_time_varying.csv", "provenance.json"})
    CHECK(fs::exists(out / base));
  // No velocity table without a moving-frame strategy.
  CHECK_FALSE(fs::exists(out / "velocity_standard.csv"));

  SUBCASE("provenance records the run") {
    auto prov = nlohmann::json::parse(read_text(out / "provenance.json"));
    CHECK(prov.at("name") == "pipeline");
    CHECK(prov.at("solver").at("type") == "linear");
    CHECK(prov.at("fit").at("window") == 10);
    CHECK(prov.at("fit").at("train_snapshots") == 51);
    CHECK(prov.at("strategies").contains("standard"));
    CHECK(prov.at("strategies").at("time_varying").at("windows") == 5);
  }

  SUBCASE("error curves cover the predict span and start at the projection") {
    for (const auto& sr : result.results) {
      REQUIRE(sr.curve.times.size() == 101);
      CHECK(sr.curve.times.front() == doctest::Approx(0.0));
      CHECK(sr.curve.times.back() == doctest::Approx(1.0));
      // Full-rank two-dimensional data projects onto itself at t = 0.
      CHECK(sr.curve.rel_errors.front() <= 1e-8);
      for (double e : sr.curve.rel_errors) CHECK(std::isfinite(e));
      CHECK(sr.predictions.count() == 101);
      CHECK(sr.predictions.dim() == 2);
    }

    // Windowed fits track the drifting rotation closely over the train span.
    const auto& tv = result.results[1];
    for (std::size_t i = 0; i < 51; ++i) CHECK(tv.curve.rel_errors[i] <= 1e-2);
  }

  SUBCASE("reruns reproduce artifacts byte for byte") {
    auto rerun = cfg;
    rerun.output_dir = scratch_dir("pipeline_rerun").string();
    dmdlab::run_experiment(rerun);
    CHECK(read_text(out / "errors_time_varying.csv") ==
          read_text(fs::path(rerun.output_dir) / "errors_time_varying.csv"));
    CHECK(read_text(out / "model_standard.csv") ==
          read_text(fs::path(rerun.output_dir) / "model_standard.csv"));
  }
}

TEST_CASE("a failing stage removes its partial artifacts") {
  SUBCASE("spans past the data horizon fail before anything is written") {
    auto cfg = baseline_config();
    cfg.output_dir = scratch_dir("fail_early").string();
    cfg.predict_t_final = 2.0;  // the solver stops at t = 1
    try {
      dmdlab::run_experiment(cfg);
      FAIL("expected the predict span to be rejected");
    } catch (const dmdlab::Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("stage slice") != std::string::npos);
      CHECK(msg.find("horizon") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(fs::path(cfg.output_dir) / "provenance.json"));
  }

  SUBCASE("a late failure cleans up files from earlier strategies") {
    auto cfg = baseline_config();
    cfg.strategies = {Strategy::standard, Strategy::time_varying};
    cfg.window = 60;  // more pairs than the train span holds
    cfg.output_dir = scratch_dir("fail_late").string();
    try {
      dmdlab::run_experiment(cfg);
      FAIL("expected the window fit to fail");
    } catch (const dmdlab::Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("stage fit time_varying") != std::string::npos);
    }
    // The standard strategy had already exported its tables; they must be gone.
    CHECK_FALSE(fs::exists(fs::path(cfg.output_dir) / "errors_standard.csv"));
    CHECK_FALSE(fs::exists(fs::path(cfg.output_dir) / "model_standard.csv"));
  }
}

TEST_CASE("error curve export layout") {
  dmdlab::ErrorCurve curve;
  curve.times = {0.0, 0.1};
  curve.rel_errors = {0.5, 0.25};
  const fs::path path = scratch_dir("csv") / "curve.csv";
  dmdlab::export_error_csv(curve, path.string());

  const std::string text = read_text(path);
  CHECK(text == "t,rel_error\n0,0.5\n0.1,0.25\n");
}

TEST_CASE("bounds suite on random instances") {
  BoundsSuiteOptions opt;
  opt.seed_count = 1;
  opt.sizes = {2, 4};
  opt.rows = 12;
  opt.with_reference_systems = false;

  auto result = dmdlab::run_bounds_suite(opt);
  // Four reports per (seed, size): rank truncation, pointwise rank, and the
  // two column-deletion variants.
  REQUIRE(result.entries.size() == 8);
  CHECK(result.all_satisfied);
  for (const auto& e : result.entries) CHECK(e.report.satisfied);

  CHECK(result.entries[0].instance.find("N=12 m=2 seed=0") != std::string::npos);
  bool saw_tightened = false;
  for (const auto& e : result.entries)
    if (e.instance.find("orthogonal") != std::string::npos) {
      CHECK(e.report.note.find("tightened") != std::string::npos);
      saw_tightened = true;
    }
  CHECK(saw_tightened);
}

TEST_CASE("bounds suite option validation") {
  BoundsSuiteOptions opt;
  opt.with_reference_systems = false;

  auto bad = opt;
  bad.seed_count = 0;
  CHECK_THROWS_AS(dmdlab::run_bounds_suite(bad), dmdlab::ConfigError);

  bad = opt;
  bad.sizes = {};
  CHECK_THROWS_AS(dmdlab::run_bounds_suite(bad), dmdlab::ConfigError);

  bad = opt;
  bad.rows = 1;
  CHECK_THROWS_AS(dmdlab::run_bounds_suite(bad), dmdlab::ConfigError);

  bad = opt;
  bad.sizes = {0};
  CHECK_THROWS_AS(dmdlab::run_bounds_suite(bad), dmdlab::ConfigError);

  // Full column rank needs strictly more rows than columns.
  bad = opt;
  bad.rows = 12;
  bad.sizes = {12};
  CHECK_THROWS_WITH_AS(dmdlab::run_bounds_suite(bad),
                       doctest::Contains("full column rank"), dmdlab::ConfigError);

  // Nothing enabled is a valid, vacuously satisfied run.
  auto empty = opt;
  empty.with_gaussian = false;
  auto result = dmdlab::run_bounds_suite(empty);
  CHECK(result.entries.empty());
  CHECK(result.all_satisfied);
}

TEST_CASE("bounds suite runs and exports deterministically") {
  BoundsSuiteOptions opt;
  opt.seed_count = 2;
  opt.sizes = {3};
  opt.rows = 10;
  opt.with_reference_systems = false;

  const fs::path dir = scratch_dir("bounds_csv");
  auto first = dmdlab::run_bounds_suite(opt);
  dmdlab::export_bounds_csv(first, (dir / "a.csv").string());
  auto second = dmdlab::run_bounds_suite(opt);
  dmdlab::export_bounds_csv(second, (dir / "b.csv").string());

  const std::string a = read_text(dir / "a.csv");
  CHECK(a == read_text(dir / "b.csv"));

  // Header plus one line per entry, each with exactly seven columns.
  CHECK(line_count(a) == first.entries.size() + 1);
  std::istringstream lines(a);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "instance,name,bound,measured,slack,satisfied,note");
  while (std::getline(lines, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
    CHECK(line.find(",1,") != std::string::npos);  // satisfied column
  }
}

}  // TEST_SUITE

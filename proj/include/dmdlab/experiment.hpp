#pragma once

// Configuration-driven experiment runner.
//
// One experiment = generate (or load) a snapshot trajectory, fit one or more
// of the four strategies on a training prefix, predict over a span, and
// compare against the held solver truth on the same grid.  Every run writes
// its error/spectrum/model tables as CSV plus a JSON provenance sidecar, so
// a figure is reproducible from its config file alone.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmdlab/bounds.hpp"
#include "dmdlab/lagrangian.hpp"
#include "dmdlab/solvers.hpp"

namespace dmdlab {

enum class Strategy {
    standard,
    time_varying,
    lagrangian,
    lagrangian_time_varying,
};

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name); ///< ConfigError on unknown names

/// ||pred - truth||_2 / ||truth||_2; DegenerateReference when the reference
/// norm is at most 1e-14.
double relative_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

struct ErrorCurve {
    std::vector<double> times;
    std::vector<double> rel_errors;
};

enum class SolverKind { advection1d, advdiff2d, navier_stokes, linear, file };

struct ExperimentConfig {
    std::string name = "experiment";

    SolverKind solver = SolverKind::advection1d;
    Advection1dConfig advection;
    AdvDiff2dConfig advdiff;
    NavierStokesConfig navier;
    double linear_epsilon = 0.1; ///< rotating 2x2 coefficient parameter
    Eigen::VectorXd linear_x0;
    double linear_dt = 1e-3;
    double linear_t_final = 1.0;
    std::string snapshot_file;

    std::vector<Strategy> strategies{Strategy::standard};
    double eps = 1e-6;       ///< SVD tail-energy tolerance
    std::size_t window = 10; ///< pairs per window (time-varying strategies)
    double train_t_final = 0.0;
    double predict_t_final = 0.0;
    std::uint64_t seed = 0;
    std::string output_dir = ".";

    /// eps in (0,1), window >= 2 where required, spans inside the solver
    /// horizon, Lagrangian strategies only on spatial solvers.
    void validate() const;
};

/// Parse the JSON config file (sections: solver, strategies, eps, window,
/// train_span, predict_span, seed, output_dir).  ConfigError on anything
/// malformed; unknown keys are rejected so typos cannot silently no-op.
ExperimentConfig load_experiment_config(const std::string& path);

/// Dispatch to the configured solver (or snapshot file).
SnapshotSet run_solver(const ExperimentConfig& cfg);

/// Tensor-grid geometry of the configured solver; empty for the dense linear
/// system and for file-loaded data.
std::optional<GridGeometry> solver_geometry(const ExperimentConfig& cfg);

struct StrategyResult {
    Strategy strategy = Strategy::standard;
    ErrorCurve curve;
    SnapshotSet predictions;            ///< Eulerian predictions on the truth grid
    std::vector<std::string> artifacts; ///< files written for this strategy
};

struct ExperimentResult {
    SnapshotSet truth;
    std::vector<StrategyResult> results;
    std::string provenance_path;
};

/// Full pipeline.  Any stage failure rethrows with the stage name attached
/// after deleting the partially written artifacts of this run.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// --- bounds verification suite ------------------------------------------------

struct BoundsSuiteOptions {
    std::size_t seed_count = 10;
    std::vector<Eigen::Index> sizes{5, 10, 20, 40}; ///< column counts m
    Eigen::Index rows = 50;                         ///< ambient dimension N
    /// Random-matrix instances (rank/pointwise/column-deletion bounds).
    bool with_gaussian = true;
    /// Also verify the time-shift bound on the three built-in reference
    /// systems (2x2 rotating, 1-D advection dim 400, 2-D advection dim 2500).
    bool with_reference_systems = true;
};

struct SuiteEntry {
    std::string instance; ///< human-readable instance label (sizes, seed)
    BoundReport report;
};

struct BoundsSuiteResult {
    std::vector<SuiteEntry> entries;
    bool all_satisfied = false;
};

/// Random-matrix verification of the rank-truncation, pointwise-rank and
/// column-deletion bounds plus the time-shift instances.  Sizes with
/// m + 1 > N are rejected up front (full column rank would be impossible).
BoundsSuiteResult run_bounds_suite(const BoundsSuiteOptions& opt = {});

void export_bounds_csv(const BoundsSuiteResult& r, const std::string& path);
void export_error_csv(const ErrorCurve& c, const std::string& path);

} // namespace dmdlab

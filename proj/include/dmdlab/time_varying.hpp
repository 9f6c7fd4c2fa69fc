#pragma once

// Piecewise-in-time operator fits for nonautonomous dynamics.
//
// The trajectory is split into consecutive windows of `window` snapshot
// pairs (the final window keeps the remainder when the count does not divide
// evenly).  Each window gets its own best-fit operator; windows share their
// seam snapshot, so the last target of window i is the first source of
// window i+1.  Prediction composes the window operators in order and lets
// the active window evolve the remainder of t.

#include <vector>

#include "dmdlab/dmd.hpp"

namespace dmdlab {

struct PiecewiseDmdModel {
    std::vector<DmdModel> models;
    std::vector<std::size_t> window_pairs; ///< pairs fitted per window
    std::size_t window = 0;                ///< requested pairs per window
    double t0 = 0.0;
    double dt = 0.0;
    Eigen::Index dim = 0;

    std::size_t window_count() const { return models.size(); }
    /// Absolute end time of window w (0-based).
    double boundary(std::size_t w) const;
    double t_final() const { return boundary(models.size() - 1); }
};

/// Fit one operator per window of `window` pairs.  Throws InvalidWindow when
/// the window is zero or exceeds the available pair count; fit failures are
/// rethrown with the window index attached.
PiecewiseDmdModel fit_piecewise(const SnapshotSet& s, std::size_t window, double eps);

/// Evaluate the composed prediction at absolute time t >= t0.  At an interior
/// boundary both adjacent formulas reduce to the same operator product; past
/// the final boundary the last window's operator keeps evolving the state.
Eigen::VectorXd predict_chained(const PiecewiseDmdModel& m, const Eigen::VectorXd& w0, double t);

/// Same composition evaluated at a sorted list of times in one forward pass.
std::vector<Eigen::VectorXd> predict_curve(const PiecewiseDmdModel& m,
                                           const Eigen::VectorXd& w0,
                                           const std::vector<double>& times);

struct LossReport {
    double loss_global = 0.0;    ///< one-step training MSE of the single fit
    double loss_piecewise = 0.0; ///< pair-weighted mean of the window MSEs
    std::vector<double> window_sse;
};

/// Training-loss comparison between one global least-squares operator and the
/// per-window operators, both evaluated at the rank selected by eps.  With
/// eps small enough to retain full numerical rank the piecewise loss can
/// never exceed the global loss (each window minimizes its own residual).
LossReport loss_dominance_report(const SnapshotSet& s, std::size_t window, double eps);

/// One row per window: t_mid plus the frequencies of the three largest-
/// amplitude modes (amplitude = Phi^+ applied to the window's first
/// snapshot); missing columns are zero-filled for narrow windows.
void export_spectrum_csv(const PiecewiseDmdModel& m, const SnapshotSet& s,
                         const std::string& path);

} // namespace dmdlab

#pragma once

// Snapshot containers shared by every solver and fitting routine.
//
// A SnapshotSet is a uniformly sampled trajectory: one state vector per time
// t_i = t0 + i*dt, stored as the columns of a dim x count matrix.  DataPair
// holds the time-shifted matrices X = [x_0 ... x_{m-1}], Y = [x_1 ... x_m]
// used by the operator fits.

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "dmdlab/errors.hpp"

namespace dmdlab {

struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t count = 0;

    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    double t_final() const { return time(count - 1); }

    /// dt > 0 and at least two samples.
    void validate() const;
};

class SnapshotSet {
public:
    SnapshotSet() = default;

    /// states: dim x grid.count, column j is the state at grid.time(j).
    /// Every entry must be finite.
    SnapshotSet(TimeGrid grid, Eigen::MatrixXd states);

    const TimeGrid& grid() const { return grid_; }
    const Eigen::MatrixXd& states() const { return states_; }
    Eigen::Index dim() const { return states_.rows(); }
    std::size_t count() const { return grid_.count; }

    Eigen::VectorXd state(std::size_t i) const;

private:
    TimeGrid grid_;
    Eigen::MatrixXd states_;
};

struct DataPair {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;

    Eigen::Index pairs() const { return X.cols(); }
};

/// X gets states 0..count-2, Y gets states 1..count-1.  Needs count >= 2.
DataPair build_data_pair(const SnapshotSet& s);

/// Contiguous sub-trajectory [first, first+n), keeping the time grid aligned.
SnapshotSet slice_window(const SnapshotSet& s, std::size_t first, std::size_t n);

/// Binary snapshot file: magic "DMDS", u32 version (=1), u64 dim, u64 count,
/// f64 t0, f64 dt, then count*dim little-endian binary64 values column-major.
/// Round-trips bit-exactly, signed zeros included.
void save_snapshots(const SnapshotSet& s, const std::string& path);
SnapshotSet load_snapshots(const std::string& path);

/// Plain-text export, header "t,<c0>,<c1>,...", one row per snapshot.
void export_snapshots_csv(const SnapshotSet& s, const std::string& path);

} // namespace dmdlab

#pragma once

// Moving-frame observables for advection-dominated fields.
//
// A transported density keeps changing which Eulerian cells it occupies, so a
// fixed-frame operator fit needs many modes to chase it.  Here the grid is
// advected along an estimated bulk velocity and the field is re-sampled onto
// that moving grid; the enlarged state [grid coordinates; resampled values]
// is then handed to the standard or piecewise operator fits.  The bulk
// velocity comes from tracking the density-weighted mean of the field.
//
// Grids are tensor products of d 1-D axes (d = 1 or 2), advected rigidly:
// the velocity depends on time only.  Values are flattened with the first
// axis outermost: index = ix * ny + iy in 2-D.

#include <functional>
#include <vector>

#include "dmdlab/time_varying.hpp"

namespace dmdlab {

struct GridGeometry {
    std::vector<Eigen::VectorXd> axes; ///< strictly increasing coordinates

    std::size_t order() const { return axes.size(); }
    Eigen::Index value_count() const;  ///< product of axis lengths
    Eigen::Index axis_count() const;   ///< sum of axis lengths
    /// axis_count + value_count: dimension of the enlarged state vector.
    Eigen::Index enlarged_dim() const { return axis_count() + value_count(); }

    void validate() const; ///< throws MeshTangled on a non-monotone axis
};

struct MovingGrid {
    GridGeometry geometry;
    double time = 0.0;
};

struct LagrangianState {
    MovingGrid grid;
    Eigen::VectorXd values; ///< field samples on the tensor grid
};

/// [axis_0; ...; axis_{d-1}; values]
Eigen::VectorXd pack_state(const LagrangianState& w);
/// Inverse of pack_state; `shape` carries the axis lengths.
LagrangianState unpack_state(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& shape,
                             double time);

/// Density-weighted mean position via trapezoid quadrature per axis.
/// Throws DegenerateDensity when the total mass is <= 1e-12.
Eigen::VectorXd mode_mean(const Eigen::VectorXd& u, const GridGeometry& g);

struct VelocityEstimate {
    Eigen::VectorXd times;
    Eigen::MatrixXd mean_path; ///< count x d
    Eigen::MatrixXd velocity;  ///< count x d
};

/// Track the mean of every snapshot and differentiate the path: centered
/// differences inside, one-sided at the ends.
VelocityEstimate estimate_velocity(const SnapshotSet& s, const GridGeometry& g);

using VelocityFn = std::function<Eigen::VectorXd(double)>;

/// Piecewise-linear interpolant of the tabulated velocity, clamped outside
/// the sampled range.
VelocityFn velocity_interpolant(const VelocityEstimate& est);

/// Advance the grid to t_next with one classical fourth-order step of
/// dX/dt = v(t).  The shift is uniform across nodes.
MovingGrid evolve_grid(const MovingGrid& g, const VelocityFn& v, double t_next);

/// Re-sample the fixed-frame trajectory onto the advected grid.  Produces the
/// enlarged states as a SnapshotSet on the same time grid.  Nodes that leave
/// the sampled domain take the boundary value; when that happens *left_domain
/// (if given) is set.
SnapshotSet to_lagrangian(const SnapshotSet& s, const GridGeometry& g, const VelocityFn& v,
                          bool* left_domain = nullptr);

/// Interpolate moving-grid values back onto a fixed target grid.  Points
/// outside the moving grid's span take its boundary values.  Throws
/// MeshTangled when a predicted axis lost monotonicity.
Eigen::VectorXd to_eulerian(const LagrangianState& w, const GridGeometry& target);

/// Standard / piecewise fits on the enlarged states.
DmdModel fit_lagrangian(const SnapshotSet& lagrangian, double eps);
PiecewiseDmdModel fit_lagrangian_tv(const SnapshotSet& lagrangian, std::size_t window, double eps);

void export_velocity_csv(const VelocityEstimate& est, const std::string& path);

} // namespace dmdlab

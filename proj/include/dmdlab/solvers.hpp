#pragma once

// Reference integrators that generate the snapshot data.
//
// Four systems: 1-D conservative advection with an oscillating velocity,
// 2-D advection-diffusion on a leapfrog/averaged-center scheme, 2-D
// incompressible flow past a cylinder on a staggered grid with pressure
// projection, and a small dense linear system driven by a time-dependent
// coefficient matrix.  Truth for every error curve is the solver output on
// its own grid — never a closed-form expression.

#include <functional>
#include <vector>

#include "dmdlab/lagrangian.hpp"
#include "dmdlab/snapshots.hpp"

namespace dmdlab {

// --- 1-D advection: du/dt + d/dx[v(t) u] = 0, v(t) = c sin(omega t) -------

struct Advection1dConfig {
    double c = 2.0;
    double omega = 1.5707963267948966; // pi/2
    double x_min = -10.0;
    double x_max = 10.0;
    double dx = 0.05;
    double dt = 0.01;
    double t_final = 8.0;
    /// Initial profile sampled at cell centers; default exp(-x^2/2).
    std::function<double(double)> initial;
};

/// Cell-centered axis for the finite-volume grid.
GridGeometry advection_1d_geometry(const Advection1dConfig& cfg);

/// First-order upwind fluxes in conservative form; the upwind side follows
/// the sign of v(t) each step.  Inflow value is zero.  Violating
/// |v| dt/dx <= 1 raises StabilityError naming the offending step.
/// `boundary_outflux`, when given, accumulates the net mass leaving through
/// the domain ends (so mass + outflux is conserved to roundoff).
SnapshotSet solve_advection_1d(const Advection1dConfig& cfg, double* boundary_outflux = nullptr);

// --- 2-D advection-diffusion -----------------------------------------------

struct AdvDiff2dConfig {
    std::function<double(double)> vx; ///< default 0.5 cos t
    std::function<double(double)> vy; ///< default -0.4 sin t
    double diffusivity = 1e-3;
    double x_min = -10.0, x_max = 10.0;
    double y_min = -10.0, y_max = 10.0;
    Eigen::Index nx = 50, ny = 50;
    double dt = 0.01;
    double t_final = 10.0;
    /// Default exp(-(x^2 + y^2)).
    std::function<double(double, double)> initial;
};

GridGeometry advdiff_2d_geometry(const AdvDiff2dConfig& cfg);

/// Leapfrog in time with the diffusion center point replaced by the average
/// of the old and new levels (the classic unconditionally stable variant);
/// the first step is bootstrapped with one forward-Euler step.  Zero
/// boundary values.  Blow-up beyond 10x the initial amplitude raises
/// StabilityError.
SnapshotSet solve_advdiff_2d(const AdvDiff2dConfig& cfg);

// --- 2-D incompressible flow past a cylinder -------------------------------

struct NavierStokesConfig {
    double rho = 1.0;
    double nu = 1.0 / 600.0;
    double lx = 2.0, ly = 1.0;
    double h = 0.02;  ///< square cells, dx = dy
    double dt = 1e-3;
    double t_final = 3.0;
    double inflow = 1.0;
    double cyl_x = 0.3, cyl_y = 0.5, cyl_r = 0.1;
    double poisson_tol = 1e-8;
    int poisson_max_iter = 10000;
};

struct NsDiagnostics {
    std::vector<double> max_divergence; ///< per step, after projection
    std::vector<int> poisson_iters;
};

GridGeometry navier_stokes_geometry(const NavierStokesConfig& cfg);

/// Staggered-grid projection step: explicit upwind convection + diffusion,
/// pressure Poisson solved by SOR to `poisson_tol` (SolverError with the
/// residual on stagnation), then the face correction.  Cells inside the
/// cylinder are masked to zero velocity.  Snapshots are the speed
/// sqrt(u^2+v^2) at cell centers, flattened with x outermost.
SnapshotSet solve_navier_stokes(const NavierStokesConfig& cfg, NsDiagnostics* diag = nullptr);

// --- dense linear system dx/dt = C(t) x + f(t) ------------------------------

struct LinearSystemConfig {
    std::function<Eigen::MatrixXd(double)> C;
    std::function<Eigen::VectorXd(double)> forcing; ///< null means zero
    Eigen::VectorXd x0;
    double t0 = 0.0;
    double dt = 1e-3;
    double t_final = 1.0;
};

/// Classical fourth-order one-step integration at the snapshot spacing.
SnapshotSet solve_linear_system(const LinearSystemConfig& cfg);

/// The rotating 2x2 coefficient matrix [[0, 1+e t], [-(1+e t), 0]] used by
/// several built-in experiments.
std::function<Eigen::MatrixXd(double)> rotating_coefficients(double epsilon);

} // namespace dmdlab

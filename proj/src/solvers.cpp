#include "dmdlab/solvers.hpp"

#include <cmath>

namespace dmdlab {

namespace {

Eigen::VectorXd cell_centers(double lo, double hi, Eigen::Index n) {
    const double h = (hi - lo) / static_cast<double>(n);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = lo + (static_cast<double>(i) + 0.5) * h;
    return x;
}

std::size_t step_count(double t_final, double dt, const char* who) {
    if (!(dt > 0.0) || !(t_final > 0.0))
        throw InvalidCoefficient(std::string(who) + ": dt and t_final must be positive");
    const double raw = t_final / dt;
    const auto steps = static_cast<std::size_t>(std::llround(raw));
    if (steps == 0) throw InsufficientData(std::string(who) + ": fewer than one step");
    return steps;
}

} // namespace

// --------------------------------------------------------------------------
// 1-D advection
// --------------------------------------------------------------------------

GridGeometry advection_1d_geometry(const Advection1dConfig& cfg) {
    if (!(cfg.x_max > cfg.x_min) || !(cfg.dx > 0.0))
        throw InvalidCoefficient("advection_1d: bad spatial extent");
    const auto n = static_cast<Eigen::Index>(std::llround((cfg.x_max - cfg.x_min) / cfg.dx));
    if (n < 2) throw InsufficientData("advection_1d: fewer than two cells");
    GridGeometry g;
    g.axes.push_back(cell_centers(cfg.x_min, cfg.x_max, n));
    return g;
}

SnapshotSet solve_advection_1d(const Advection1dConfig& cfg, double* boundary_outflux) {
    const GridGeometry g = advection_1d_geometry(cfg);
    const Eigen::VectorXd& x = g.axes[0];
    const Eigen::Index n = x.size();
    const double dx = (cfg.x_max - cfg.x_min) / static_cast<double>(n);
    const std::size_t steps = step_count(cfg.t_final, cfg.dt, "advection_1d");

    std::function<double(double)> u0 = cfg.initial;
    if (!u0) u0 = [](double xi) { return std::exp(-0.5 * xi * xi); };

    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) u(i) = u0(x(i));
    if (!u.allFinite()) throw InvalidCoefficient("advection_1d: non-finite initial profile");

    Eigen::MatrixXd states(n, static_cast<Eigen::Index>(steps + 1));
    states.col(0) = u;
    double outflux = 0.0;

    Eigen::VectorXd flux(n + 1); // face i sits between cells i-1 and i
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const double v = cfg.c * std::sin(cfg.omega * t);
        const double cfl = std::abs(v) * cfg.dt / dx;
        if (cfl > 1.0 + 1e-12)
            throw StabilityError("advection_1d: CFL " + std::to_string(cfl) +
                                 " > 1 at step " + std::to_string(k));

        // Upwind donor value; zero inflow outside the domain.
        for (Eigen::Index f = 0; f <= n; ++f) {
            double donor;
            if (v >= 0.0)
                donor = (f == 0) ? 0.0 : u(f - 1);
            else
                donor = (f == n) ? 0.0 : u(f);
            flux(f) = v * donor;
        }
        outflux += cfg.dt * (flux(n) - flux(0));
        for (Eigen::Index i = 0; i < n; ++i)
            u(i) -= cfg.dt / dx * (flux(i + 1) - flux(i));

        states.col(static_cast<Eigen::Index>(k + 1)) = u;
    }

    if (boundary_outflux) *boundary_outflux = outflux;
    return SnapshotSet(TimeGrid{0.0, cfg.dt, steps + 1}, std::move(states));
}

// --------------------------------------------------------------------------
// 2-D advection-diffusion
// --------------------------------------------------------------------------

GridGeometry advdiff_2d_geometry(const AdvDiff2dConfig& cfg) {
    if (!(cfg.x_max > cfg.x_min) || !(cfg.y_max > cfg.y_min) || cfg.nx < 3 || cfg.ny < 3)
        throw InvalidCoefficient("advdiff_2d: bad spatial extent");
    GridGeometry g;
    g.axes.push_back(cell_centers(cfg.x_min, cfg.x_max, cfg.nx));
    g.axes.push_back(cell_centers(cfg.y_min, cfg.y_max, cfg.ny));
    return g;
}

SnapshotSet solve_advdiff_2d(const AdvDiff2dConfig& cfg) {
    if (cfg.diffusivity < 0.0) throw InvalidCoefficient("advdiff_2d: negative diffusivity");
    const GridGeometry g = advdiff_2d_geometry(cfg);
    const Eigen::VectorXd& xs = g.axes[0];
    const Eigen::VectorXd& ys = g.axes[1];
    const Eigen::Index nx = xs.size(), ny = ys.size();
    const double dx = (cfg.x_max - cfg.x_min) / static_cast<double>(nx);
    const double dy = (cfg.y_max - cfg.y_min) / static_cast<double>(ny);
    const std::size_t steps = step_count(cfg.t_final, cfg.dt, "advdiff_2d");

    std::function<double(double)> vx = cfg.vx, vy = cfg.vy;
    if (!vx) vx = [](double t) { return 0.5 * std::cos(t); };
    if (!vy) vy = [](double t) { return -0.4 * std::sin(t); };
    std::function<double(double, double)> u0 = cfg.initial;
    if (!u0) u0 = [](double xq, double yq) { return std::exp(-(xq * xq + yq * yq)); };

    const auto id = [ny](Eigen::Index i, Eigen::Index j) { return i * ny + j; };
    const auto at = [&](const Eigen::VectorXd& f, Eigen::Index i, Eigen::Index j) {
        return (i < 0 || i >= nx || j < 0 || j >= ny) ? 0.0 : f(id(i, j));
    };

    Eigen::VectorXd prev(nx * ny);
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < ny; ++j) prev(id(i, j)) = u0(xs(i), ys(j));
    if (!prev.allFinite()) throw InvalidCoefficient("advdiff_2d: non-finite initial profile");
    const double cap = 10.0 * prev.cwiseAbs().maxCoeff() + 1e-300;

    Eigen::MatrixXd states(nx * ny, static_cast<Eigen::Index>(steps + 1));
    states.col(0) = prev;

    const double d = cfg.diffusivity;
    const double a = 2.0 * d * cfg.dt / (dx * dx);
    const double b = 2.0 * d * cfg.dt / (dy * dy);

    // Bootstrap: one forward-Euler step with centered differences.
    Eigen::VectorXd curr(nx * ny);
    {
        const double cx = vx(0.0), cy = vy(0.0);
        for (Eigen::Index i = 0; i < nx; ++i) {
            for (Eigen::Index j = 0; j < ny; ++j) {
                const double uc = prev(id(i, j));
                const double ue = at(prev, i + 1, j), uw = at(prev, i - 1, j);
                const double un = at(prev, i, j + 1), us = at(prev, i, j - 1);
                curr(id(i, j)) = uc + cfg.dt * (-cx * (ue - uw) / (2.0 * dx)
                                                - cy * (un - us) / (2.0 * dy)
                                                + d * ((ue - 2.0 * uc + uw) / (dx * dx)
                                                       + (un - 2.0 * uc + us) / (dy * dy)));
            }
        }
        states.col(1) = curr;
    }

    Eigen::VectorXd next(nx * ny);
    for (std::size_t k = 1; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const double cx = vx(t), cy = vy(t);
        for (Eigen::Index i = 0; i < nx; ++i) {
            for (Eigen::Index j = 0; j < ny; ++j) {
                const double ue = at(curr, i + 1, j), uw = at(curr, i - 1, j);
                const double un = at(curr, i, j + 1), us = at(curr, i, j - 1);
                next(id(i, j)) = ((1.0 - a - b) * prev(id(i, j))
                                  - cfg.dt / dx * cx * (ue - uw)
                                  - cfg.dt / dy * cy * (un - us)
                                  + a * (ue + uw) + b * (un + us)) / (1.0 + a + b);
            }
        }
        prev.swap(curr);
        curr.swap(next);
        if (curr.cwiseAbs().maxCoeff() > cap)
            throw StabilityError("advdiff_2d: amplitude blew past 10x the initial profile at step " +
                                 std::to_string(k));
        states.col(static_cast<Eigen::Index>(k + 1)) = curr;
    }

    return SnapshotSet(TimeGrid{0.0, cfg.dt, steps + 1}, std::move(states));
}

// --------------------------------------------------------------------------
// 2-D incompressible flow (staggered grid, projection)
// --------------------------------------------------------------------------

GridGeometry navier_stokes_geometry(const NavierStokesConfig& cfg) {
    const auto nx = static_cast<Eigen::Index>(std::llround(cfg.lx / cfg.h));
    const auto ny = static_cast<Eigen::Index>(std::llround(cfg.ly / cfg.h));
    if (nx < 4 || ny < 4) throw InvalidCoefficient("navier_stokes: grid too coarse");
    GridGeometry g;
    g.axes.push_back(cell_centers(0.0, cfg.lx, nx));
    g.axes.push_back(cell_centers(0.0, cfg.ly, ny));
    return g;
}

namespace {

struct StaggeredField {
    Eigen::MatrixXd u; ///< (nx+1) x ny, x-velocity on vertical faces
    Eigen::MatrixXd v; ///< nx x (ny+1), y-velocity on horizontal faces
};

class NsStepper {
public:
    explicit NsStepper(const NavierStokesConfig& cfg) : cfg_(cfg) {
        if (!(cfg.rho > 0.0) || !(cfg.nu > 0.0))
            throw InvalidCoefficient("navier_stokes: rho and nu must be positive");
        const GridGeometry g = navier_stokes_geometry(cfg);
        nx_ = g.axes[0].size();
        ny_ = g.axes[1].size();
        h_ = cfg.lx / static_cast<double>(nx_);

        solid_.resize(nx_, ny_);
        for (Eigen::Index i = 0; i < nx_; ++i)
            for (Eigen::Index j = 0; j < ny_; ++j) {
                const double cx = g.axes[0](i) - cfg.cyl_x;
                const double cy = g.axes[1](j) - cfg.cyl_y;
                solid_(i, j) = (cx * cx + cy * cy <= cfg.cyl_r * cfg.cyl_r) ? 1 : 0;
            }

        f_.u = Eigen::MatrixXd::Constant(nx_ + 1, ny_, cfg.inflow);
        f_.v = Eigen::MatrixXd::Zero(nx_, ny_ + 1);
        p_ = Eigen::MatrixXd::Zero(nx_, ny_);
        apply_bcs(f_);
        mask_solid(f_);
    }

    Eigen::Index nx() const { return nx_; }
    Eigen::Index ny() const { return ny_; }

    /// Speed at cell centers, x index outermost; zero inside the mask.
    Eigen::VectorXd speed_snapshot() const {
        Eigen::VectorXd w(nx_ * ny_);
        for (Eigen::Index i = 0; i < nx_; ++i)
            for (Eigen::Index j = 0; j < ny_; ++j) {
                if (solid_(i, j)) {
                    w(i * ny_ + j) = 0.0;
                    continue;
                }
                const double uc = 0.5 * (f_.u(i, j) + f_.u(i + 1, j));
                const double vc = 0.5 * (f_.v(i, j) + f_.v(i, j + 1));
                w(i * ny_ + j) = std::hypot(uc, vc);
            }
        return w;
    }

    /// One projection step; returns the post-projection max |divergence|.
    double step(int* iters_out) {
        StaggeredField s = f_; // provisional velocities
        advance(f_, s);
        apply_bcs(s);
        mask_solid(s);

        const int iters = solve_pressure(s);
        if (iters_out) *iters_out = iters;

        correct(s);
        mask_solid(s);
        f_ = s;
        return max_divergence();
    }

private:
    bool fluid(Eigen::Index i, Eigen::Index j) const {
        return i >= 0 && i < nx_ && j >= 0 && j < ny_ && !solid_(i, j);
    }

    void apply_bcs(StaggeredField& s) const {
        for (Eigen::Index j = 0; j < ny_; ++j) {
            s.u(0, j) = cfg_.inflow;        // inflow
            s.u(nx_, j) = s.u(nx_ - 1, j);  // outflow, zero gradient
        }
        for (Eigen::Index i = 0; i < nx_; ++i) {
            s.v(i, 0) = 0.0;   // walls
            s.v(i, ny_) = 0.0;
        }
    }

    void mask_solid(StaggeredField& s) const {
        for (Eigen::Index i = 0; i < nx_; ++i)
            for (Eigen::Index j = 0; j < ny_; ++j) {
                if (!solid_(i, j)) continue;
                s.u(i, j) = 0.0;
                s.u(i + 1, j) = 0.0;
                s.v(i, j) = 0.0;
                s.v(i, j + 1) = 0.0;
            }
    }

    /// Explicit upwind convection + centered diffusion on every free face.
    void advance(const StaggeredField& o, StaggeredField& s) const {
        const double dt = cfg_.dt, nu = cfg_.nu, h = h_;

        for (Eigen::Index i = 1; i < nx_; ++i) {
            for (Eigen::Index j = 0; j < ny_; ++j) {
                if (!fluid(i - 1, j) || !fluid(i, j)) continue; // face stays masked or solid
                // convective fluxes, donor-cell
                const double ue = 0.5 * (o.u(i, j) + o.u(i + 1, j));
                const double uw = 0.5 * (o.u(i - 1, j) + o.u(i, j));
                const double fe = ue * (ue >= 0.0 ? o.u(i, j) : o.u(i + 1, j));
                const double fw = uw * (uw >= 0.0 ? o.u(i - 1, j) : o.u(i, j));
                const double vn = 0.5 * (o.v(i - 1, j + 1) + o.v(i, j + 1));
                const double vs = 0.5 * (o.v(i - 1, j) + o.v(i, j));
                // Free-slip channel walls: zero normal flow, zero shear.
                const double un_val = (j + 1 < ny_) ? o.u(i, j + 1) : o.u(i, j);
                const double us_val = (j > 0) ? o.u(i, j - 1) : o.u(i, j);
                const double gn = vn * (vn >= 0.0 ? o.u(i, j) : un_val);
                const double gs = vs * (vs >= 0.0 ? us_val : o.u(i, j));
                const double conv = (fe - fw) / h + (gn - gs) / h;
                const double lap = (o.u(i + 1, j) - 2.0 * o.u(i, j) + o.u(i - 1, j)
                                    + un_val - 2.0 * o.u(i, j) + us_val) / (h * h);
                s.u(i, j) = o.u(i, j) + dt * (-conv + nu * lap);
            }
        }

        for (Eigen::Index i = 0; i < nx_; ++i) {
            for (Eigen::Index j = 1; j < ny_; ++j) {
                if (!fluid(i, j - 1) || !fluid(i, j)) continue;
                const double vn = 0.5 * (o.v(i, j) + o.v(i, j + 1));
                const double vs = 0.5 * (o.v(i, j - 1) + o.v(i, j));
                const double gn = vn * (vn >= 0.0 ? o.v(i, j) : o.v(i, j + 1));
                const double gs = vs * (vs >= 0.0 ? o.v(i, j - 1) : o.v(i, j));
                const double ve_val = (i + 1 < nx_) ? o.v(i + 1, j) : o.v(i, j);
                const double vw_val = (i > 0) ? o.v(i - 1, j) : -o.v(i, j);
                const double ue = 0.5 * (o.u(i + 1, j - 1) + o.u(i + 1, j));
                const double fe = ue * (ue >= 0.0 ? o.v(i, j) : ve_val);
                double fw;
                if (i > 0) {
                    const double uw = 0.5 * (o.u(i, j - 1) + o.u(i, j));
                    fw = uw * (uw >= 0.0 ? vw_val : o.v(i, j));
                } else {
                    fw = 0.0; // inflow carries no transverse momentum
                }
                const double conv = (fe - fw) / h + (gn - gs) / h;
                const double lap = (ve_val - 2.0 * o.v(i, j) + vw_val
                                    + o.v(i, j + 1) - 2.0 * o.v(i, j) + o.v(i, j - 1)) / (h * h);
                s.v(i, j) = o.v(i, j) + dt * (-conv + nu * lap);
            }
        }
    }

    /// Masked five-point Laplacian.  Fixed-velocity faces (inflow, walls,
    /// solid) contribute nothing; the outflow column sees a mirrored ghost
    /// enforcing p = 0 on the boundary face.
    double laplacian(const Eigen::MatrixXd& p, Eigen::Index i, Eigen::Index j) const {
        double acc = 0.0;
        if (fluid(i - 1, j)) acc += p(i - 1, j) - p(i, j);
        if (fluid(i + 1, j)) acc += p(i + 1, j) - p(i, j);
        else if (i == nx_ - 1) acc += -2.0 * p(i, j);
        if (fluid(i, j - 1)) acc += p(i, j - 1) - p(i, j);
        if (fluid(i, j + 1)) acc += p(i, j + 1) - p(i, j);
        return acc / (h_ * h_);
    }

    double divergence(const StaggeredField& s, Eigen::Index i, Eigen::Index j) const {
        return (s.u(i + 1, j) - s.u(i, j) + s.v(i, j + 1) - s.v(i, j)) / h_;
    }

    int solve_pressure(const StaggeredField& s) {
        rhs_.resize(nx_, ny_);
        for (Eigen::Index i = 0; i < nx_; ++i)
            for (Eigen::Index j = 0; j < ny_; ++j)
                rhs_(i, j) = solid_(i, j) ? 0.0 : cfg_.rho / cfg_.dt * divergence(s, i, j);

        const auto n_big = static_cast<double>(std::max(nx_, ny_));
        const double omega = 2.0 / (1.0 + std::sin(3.14159265358979323846 / n_big));

        for (int it = 1; it <= cfg_.poisson_max_iter; ++it) {
            for (Eigen::Index i = 0; i < nx_; ++i) {
                for (Eigen::Index j = 0; j < ny_; ++j) {
                    if (solid_(i, j)) continue;
                    double nb = 0.0;
                    double diag = 0.0;
                    if (fluid(i - 1, j)) { nb += p_(i - 1, j); diag += 1.0; }
                    if (fluid(i + 1, j)) { nb += p_(i + 1, j); diag += 1.0; }
                    else if (i == nx_ - 1) { diag += 2.0; }
                    if (fluid(i, j - 1)) { nb += p_(i, j - 1); diag += 1.0; }
                    if (fluid(i, j + 1)) { nb += p_(i, j + 1); diag += 1.0; }
                    if (diag == 0.0) continue; // isolated cell: nothing to solve
                    const double gs = (nb - h_ * h_ * rhs_(i, j)) / diag;
                    p_(i, j) += omega * (gs - p_(i, j));
                }
            }
            double res = 0.0;
            for (Eigen::Index i = 0; i < nx_; ++i)
                for (Eigen::Index j = 0; j < ny_; ++j)
                    if (!solid_(i, j))
                        res = std::max(res, std::abs(laplacian(p_, i, j) - rhs_(i, j)));
            if (res <= cfg_.poisson_tol) return it;
        }

        double res = 0.0;
        for (Eigen::Index i = 0; i < nx_; ++i)
            for (Eigen::Index j = 0; j < ny_; ++j)
                if (!solid_(i, j)) res = std::max(res, std::abs(laplacian(p_, i, j) - rhs_(i, j)));
        throw SolverError("navier_stokes: pressure solve stalled at residual " +
                          std::to_string(res) + " after " +
                          std::to_string(cfg_.poisson_max_iter) + " iterations");
    }

    /// Subtract dt/rho * grad p on every face the Poisson stencil saw.
    void correct(StaggeredField& s) const {
        const double scale = cfg_.dt / (cfg_.rho * h_);
        for (Eigen::Index i = 1; i < nx_; ++i)
            for (Eigen::Index j = 0; j < ny_; ++j)
                if (fluid(i - 1, j) && fluid(i, j))
                    s.u(i, j) -= scale * (p_(i, j) - p_(i - 1, j));
        for (Eigen::Index j = 0; j < ny_; ++j)
            if (fluid(nx_ - 1, j))
                s.u(nx_, j) -= scale * (-2.0 * p_(nx_ - 1, j)); // ghost mirrors p=0 outlet
        for (Eigen::Index i = 0; i < nx_; ++i)
            for (Eigen::Index j = 1; j < ny_; ++j)
                if (fluid(i, j - 1) && fluid(i, j))
                    s.v(i, j) -= scale * (p_(i, j) - p_(i, j - 1));
    }

    double max_divergence() const {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < nx_; ++i)
            for (Eigen::Index j = 0; j < ny_; ++j)
                if (!solid_(i, j)) worst = std::max(worst, std::abs(divergence(f_, i, j)));
        return worst;
    }

    NavierStokesConfig cfg_;
    Eigen::Index nx_ = 0, ny_ = 0;
    double h_ = 0.0;
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> solid_;
    StaggeredField f_;
    Eigen::MatrixXd p_, rhs_;
};

} // namespace

SnapshotSet solve_navier_stokes(const NavierStokesConfig& cfg, NsDiagnostics* diag) {
    NsStepper stepper(cfg);
    const std::size_t steps = step_count(cfg.t_final, cfg.dt, "navier_stokes");

    Eigen::MatrixXd states(stepper.nx() * stepper.ny(), static_cast<Eigen::Index>(steps + 1));
    states.col(0) = stepper.speed_snapshot();

    for (std::size_t k = 0; k < steps; ++k) {
        int iters = 0;
        const double div = stepper.step(&iters);
        if (diag) {
            diag->max_divergence.push_back(div);
            diag->poisson_iters.push_back(iters);
        }
        states.col(static_cast<Eigen::Index>(k + 1)) = stepper.speed_snapshot();
    }
    return SnapshotSet(TimeGrid{0.0, cfg.dt, steps + 1}, std::move(states));
}

// --------------------------------------------------------------------------
// dense linear system
// --------------------------------------------------------------------------

SnapshotSet solve_linear_system(const LinearSystemConfig& cfg) {
    if (!cfg.C) throw InvalidCoefficient("linear_system: coefficient function is required");
    if (cfg.x0.size() == 0) throw InsufficientData("linear_system: empty initial state");
    const std::size_t steps = step_count(cfg.t_final - cfg.t0, cfg.dt, "linear_system");

    const auto rhs = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::MatrixXd c = cfg.C(t);
        if (c.rows() != cfg.x0.size() || c.cols() != cfg.x0.size())
            throw InvalidCoefficient("linear_system: C(t) shape does not match the state");
        Eigen::VectorXd r = c * x;
        if (cfg.forcing) r += cfg.forcing(t);
        return r;
    };

    Eigen::VectorXd x = cfg.x0;
    Eigen::MatrixXd states(x.size(), static_cast<Eigen::Index>(steps + 1));
    states.col(0) = x;

    for (std::size_t k = 0; k < steps; ++k) {
        const double t = cfg.t0 + static_cast<double>(k) * cfg.dt;
        const double h = cfg.dt;
        const Eigen::VectorXd k1 = rhs(t, x);
        const Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
        const Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
        const Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite())
            throw StabilityError("linear_system: state diverged at step " + std::to_string(k));
        states.col(static_cast<Eigen::Index>(k + 1)) = x;
    }
    return SnapshotSet(TimeGrid{cfg.t0, cfg.dt, steps + 1}, std::move(states));
}

std::function<Eigen::MatrixXd(double)> rotating_coefficients(double epsilon) {
    return [epsilon](double t) {
        Eigen::MatrixXd c(2, 2);
        const double s = 1.0 + epsilon * t;
        c << 0.0, s, -s, 0.0;
        return c;
    };
}

} // namespace dmdlab

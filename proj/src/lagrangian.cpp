#include "dmdlab/lagrangian.hpp"

#include <algorithm>
#include <cmath>

#include "dmdlab/csv.hpp"

namespace dmdlab {

Eigen::Index GridGeometry::value_count() const {
    Eigen::Index n = 1;
    for (const auto& a : axes) n *= a.size();
    return axes.empty() ? 0 : n;
}

Eigen::Index GridGeometry::axis_count() const {
    Eigen::Index n = 0;
    for (const auto& a : axes) n += a.size();
    return n;
}

void GridGeometry::validate() const {
    if (axes.empty() || axes.size() > 2)
        throw IndexError("GridGeometry: only 1-D and 2-D tensor grids are supported");
    for (const auto& a : axes) {
        if (a.size() < 2) throw InsufficientData("GridGeometry: axis needs at least two nodes");
        for (Eigen::Index i = 1; i < a.size(); ++i)
            if (!(a(i) > a(i - 1))) throw MeshTangled("GridGeometry: axis not strictly increasing");
    }
}

Eigen::VectorXd pack_state(const LagrangianState& w) {
    const Eigen::Index na = w.grid.geometry.axis_count();
    Eigen::VectorXd v(na + w.values.size());
    Eigen::Index at = 0;
    for (const auto& a : w.grid.geometry.axes) {
        v.segment(at, a.size()) = a;
        at += a.size();
    }
    v.segment(at, w.values.size()) = w.values;
    return v;
}

LagrangianState unpack_state(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& shape,
                             double time) {
    Eigen::Index na = 0, nv = 1;
    for (const Eigen::Index n : shape) {
        na += n;
        nv *= n;
    }
    if (shape.empty() || v.size() != na + nv)
        throw IndexError("unpack_state: vector length does not match the grid shape");

    LagrangianState w;
    w.grid.time = time;
    Eigen::Index at = 0;
    for (const Eigen::Index n : shape) {
        w.grid.geometry.axes.push_back(v.segment(at, n));
        at += n;
    }
    w.values = v.segment(at, nv);
    return w;
}

namespace {

/// Trapezoid quadrature weights along one (possibly non-uniform) axis.
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& axis) {
    const Eigen::Index n = axis.size();
    Eigen::VectorXd w(n);
    w(0) = 0.5 * (axis(1) - axis(0));
    for (Eigen::Index i = 1; i + 1 < n; ++i) w(i) = 0.5 * (axis(i + 1) - axis(i - 1));
    w(n - 1) = 0.5 * (axis(n - 1) - axis(n - 2));
    return w;
}

struct InterpWeight {
    Eigen::Index k = 0;  ///< left node index
    double w = 1.0;      ///< weight of the left node
    bool outside = false;
};

/// Linear interpolation bracket with clamping to the boundary value.
InterpWeight bracket(const Eigen::VectorXd& axis, double q) {
    const Eigen::Index n = axis.size();
    InterpWeight iw;
    if (q <= axis(0)) {
        iw.k = 0;
        iw.w = 1.0;
        iw.outside = q < axis(0);
        return iw;
    }
    if (q >= axis(n - 1)) {
        iw.k = n - 2;
        iw.w = 0.0;
        iw.outside = q > axis(n - 1);
        return iw;
    }
    const double* lo = std::upper_bound(axis.data(), axis.data() + n, q);
    iw.k = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(lo - axis.data()) - 1);
    iw.w = (axis(iw.k + 1) - q) / (axis(iw.k + 1) - axis(iw.k));
    return iw;
}

/// Resample `values` living on `src` axes at the tensor points of `dst`.
/// Both grids use the first axis as the outer (slowest) index.
Eigen::VectorXd resample(const std::vector<Eigen::VectorXd>& src, const Eigen::VectorXd& values,
                         const std::vector<Eigen::VectorXd>& dst, bool* outside) {
    if (src.size() == 1) {
        const Eigen::Index n = dst[0].size();
        Eigen::VectorXd out(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const InterpWeight ix = bracket(src[0], dst[0](i));
            if (ix.outside && outside) *outside = true;
            out(i) = ix.w * values(ix.k) + (1.0 - ix.w) * values(ix.k + 1);
        }
        return out;
    }

    const Eigen::Index nx = dst[0].size(), ny = dst[1].size();
    const Eigen::Index sy = src[1].size();
    std::vector<InterpWeight> wx(static_cast<std::size_t>(nx)), wy(static_cast<std::size_t>(ny));
    for (Eigen::Index i = 0; i < nx; ++i) {
        wx[static_cast<std::size_t>(i)] = bracket(src[0], dst[0](i));
        if (wx[static_cast<std::size_t>(i)].outside && outside) *outside = true;
    }
    for (Eigen::Index j = 0; j < ny; ++j) {
        wy[static_cast<std::size_t>(j)] = bracket(src[1], dst[1](j));
        if (wy[static_cast<std::size_t>(j)].outside && outside) *outside = true;
    }

    Eigen::VectorXd out(nx * ny);
    for (Eigen::Index i = 0; i < nx; ++i) {
        const auto& bx = wx[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < ny; ++j) {
            const auto& by = wy[static_cast<std::size_t>(j)];
            const double v00 = values(bx.k * sy + by.k);
            const double v01 = values(bx.k * sy + by.k + 1);
            const double v10 = values((bx.k + 1) * sy + by.k);
            const double v11 = values((bx.k + 1) * sy + by.k + 1);
            out(i * ny + j) = bx.w * (by.w * v00 + (1.0 - by.w) * v01) +
                              (1.0 - bx.w) * (by.w * v10 + (1.0 - by.w) * v11);
        }
    }
    return out;
}

} // namespace

Eigen::VectorXd mode_mean(const Eigen::VectorXd& u, const GridGeometry& g) {
    g.validate();
    if (u.size() != g.value_count()) throw IndexError("mode_mean: field size does not match grid");

    std::vector<Eigen::VectorXd> weights;
    for (const auto& a : g.axes) weights.push_back(trapezoid_weights(a));

    const std::size_t d = g.order();
    double mass = 0.0;
    Eigen::VectorXd first(d);
    first.setZero();

    if (d == 1) {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const double wu = weights[0](i) * u(i);
            mass += wu;
            first(0) += wu * g.axes[0](i);
        }
    } else {
        const Eigen::Index ny = g.axes[1].size();
        for (Eigen::Index i = 0; i < g.axes[0].size(); ++i) {
            for (Eigen::Index j = 0; j < ny; ++j) {
                const double wu = weights[0](i) * weights[1](j) * u(i * ny + j);
                mass += wu;
                first(0) += wu * g.axes[0](i);
                first(1) += wu * g.axes[1](j);
            }
        }
    }
    if (!(mass > 1e-12)) throw DegenerateDensity("mode_mean: total mass below 1e-12");
    return first / mass;
}

VelocityEstimate estimate_velocity(const SnapshotSet& s, const GridGeometry& g) {
    g.validate();
    if (s.dim() != g.value_count())
        throw IndexError("estimate_velocity: snapshot dimension does not match grid");

    const std::size_t n = s.count();
    const std::size_t d = g.order();
    VelocityEstimate est;
    est.times.resize(static_cast<Eigen::Index>(n));
    est.mean_path.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    est.velocity.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));

    for (std::size_t i = 0; i < n; ++i) {
        est.times(static_cast<Eigen::Index>(i)) = s.grid().time(i);
        est.mean_path.row(static_cast<Eigen::Index>(i)) = mode_mean(s.state(i), g).transpose();
    }

    for (std::size_t k = 0; k < d; ++k) {
        const double lo = g.axes[k].minCoeff(), hi = g.axes[k].maxCoeff();
        for (std::size_t i = 0; i < n; ++i) {
            const double x = est.mean_path(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
            if (x < lo || x > hi)
                throw DegenerateDensity("estimate_velocity: tracked mean left the domain");
        }
    }

    const double dt = s.grid().dt;
    const Eigen::Index last = static_cast<Eigen::Index>(n) - 1;
    est.velocity.row(0) = (est.mean_path.row(1) - est.mean_path.row(0)) / dt;
    est.velocity.row(last) = (est.mean_path.row(last) - est.mean_path.row(last - 1)) / dt;
    for (Eigen::Index i = 1; i < last; ++i)
        est.velocity.row(i) = (est.mean_path.row(i + 1) - est.mean_path.row(i - 1)) / (2.0 * dt);
    return est;
}

VelocityFn velocity_interpolant(const VelocityEstimate& est) {
    if (est.times.size() < 2)
        throw InsufficientData("velocity_interpolant: need at least two samples");
    return [times = est.times, vel = est.velocity](double t) -> Eigen::VectorXd {
        const InterpWeight b = bracket(times, t);
        return b.w * vel.row(b.k).transpose() + (1.0 - b.w) * vel.row(b.k + 1).transpose();
    };
}

MovingGrid evolve_grid(const MovingGrid& g, const VelocityFn& v, double t_next) {
    g.geometry.validate();
    if (t_next < g.time) throw IndexError("evolve_grid: cannot evolve backwards in time");

    const double h = t_next - g.time;
    const Eigen::VectorXd k1 = v(g.time);
    if (k1.size() != static_cast<Eigen::Index>(g.geometry.order()))
        throw IndexError("evolve_grid: velocity dimension does not match grid order");
    const Eigen::VectorXd k2 = v(g.time + 0.5 * h);
    const Eigen::VectorXd k3 = k2; // dX/dt has no X dependence
    const Eigen::VectorXd k4 = v(t_next);
    const Eigen::VectorXd shift = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    MovingGrid out = g;
    out.time = t_next;
    for (std::size_t k = 0; k < g.geometry.order(); ++k)
        out.geometry.axes[k].array() += shift(static_cast<Eigen::Index>(k));
    return out;
}

SnapshotSet to_lagrangian(const SnapshotSet& s, const GridGeometry& g, const VelocityFn& v,
                          bool* left_domain) {
    g.validate();
    if (s.dim() != g.value_count())
        throw IndexError("to_lagrangian: snapshot dimension does not match grid");
    if (left_domain) *left_domain = false;

    const Eigen::Index big = g.enlarged_dim();
    Eigen::MatrixXd states(big, static_cast<Eigen::Index>(s.count()));

    MovingGrid grid{g, s.grid().t0};
    for (std::size_t i = 0; i < s.count(); ++i) {
        if (i > 0) grid = evolve_grid(grid, v, s.grid().time(i));
        bool outside = false;
        LagrangianState w;
        w.grid = grid;
        w.values = resample(g.axes, s.state(i), grid.geometry.axes, &outside);
        if (outside && left_domain) *left_domain = true;
        states.col(static_cast<Eigen::Index>(i)) = pack_state(w);
    }
    return SnapshotSet(s.grid(), std::move(states));
}

Eigen::VectorXd to_eulerian(const LagrangianState& w, const GridGeometry& target) {
    w.grid.geometry.validate(); // MeshTangled on non-monotone predicted axes
    target.validate();
    if (w.values.size() != w.grid.geometry.value_count())
        throw IndexError("to_eulerian: values do not match the moving grid");
    if (target.order() != w.grid.geometry.order())
        throw IndexError("to_eulerian: grid order mismatch");
    return resample(w.grid.geometry.axes, w.values, target.axes, nullptr);
}

DmdModel fit_lagrangian(const SnapshotSet& lagrangian, double eps) {
    return fit_standard(build_data_pair(lagrangian), eps, lagrangian.grid().dt);
}

PiecewiseDmdModel fit_lagrangian_tv(const SnapshotSet& lagrangian, std::size_t window,
                                    double eps) {
    return fit_piecewise(lagrangian, window, eps);
}

void export_velocity_csv(const VelocityEstimate& est, const std::string& path) {
    csv::Writer w(path);
    std::vector<std::string> names{"t", "v_x"};
    if (est.velocity.cols() > 1) names.push_back("v_y");
    w.header(names);
    for (Eigen::Index i = 0; i < est.times.size(); ++i) {
        std::vector<double> row{est.times(i)};
        for (Eigen::Index k = 0; k < est.velocity.cols(); ++k) row.push_back(est.velocity(i, k));
        w.row(row);
    }
}

} // namespace dmdlab

#include "dmdlab/time_varying.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dmdlab/csv.hpp"

namespace dmdlab {

namespace {

/// Cumulative pair count up to and including window w.
std::size_t pairs_through(const PiecewiseDmdModel& m, std::size_t w) {
    std::size_t n = 0;
    for (std::size_t i = 0; i <= w; ++i) n += m.window_pairs[i];
    return n;
}

} // namespace

double PiecewiseDmdModel::boundary(std::size_t w) const {
    if (w >= models.size()) throw IndexError("PiecewiseDmdModel: window index out of range");
    return t0 + static_cast<double>(pairs_through(*this, w)) * dt;
}

PiecewiseDmdModel fit_piecewise(const SnapshotSet& s, std::size_t window, double eps) {
    const std::size_t m = s.count() - 1;
    if (window < 2 || window > m)
        throw InvalidWindow("fit_piecewise: window must satisfy 2 <= window <= pair count (" +
                            std::to_string(m) + ")");

    PiecewiseDmdModel out;
    out.window = window;
    out.t0 = s.grid().t0;
    out.dt = s.grid().dt;
    out.dim = s.dim();

    for (std::size_t start = 0; start < m; start += window) {
        const std::size_t len = std::min(window, m - start);
        const SnapshotSet piece = slice_window(s, start, len + 1);
        const std::size_t idx = out.models.size();
        try {
            out.models.push_back(fit_standard(build_data_pair(piece), eps, s.grid().dt));
        } catch (const DegenerateInput& e) {
            throw DegenerateInput("window " + std::to_string(idx) + ": " + e.what());
        } catch (const DefectiveOperator& e) {
            throw DefectiveOperator("window " + std::to_string(idx) + ": " + e.what());
        } catch (const Error& e) {
            throw Error("window " + std::to_string(idx) + ": " + e.what());
        }
        out.window_pairs.push_back(len);
    }
    return out;
}

namespace {

/// Shared walker for chained evaluation.  Applies completed windows to the
/// running complex state and evaluates the active window for the remainder.
/// Boundary times (within tol) return the completed product unmodified, so
/// evaluating at a seam never inserts an extra rank-r projection.
class ChainWalker {
public:
    ChainWalker(const PiecewiseDmdModel& m, const Eigen::VectorXd& w0)
        : m_(m), state_(w0.cast<std::complex<double>>()), t_boundary_(m.t0) {
        if (w0.size() != m.dim) throw IndexError("predict_chained: state dimension mismatch");
        if (m.models.empty()) throw InsufficientData("predict_chained: empty model");
    }

    Eigen::VectorXd eval(double t) {
        const double tol = 1e-9 * m_.dt;
        if (t < m_.t0 - tol) throw IndexError("predict_chained: t precedes the training origin");
        if (t < last_t_ - tol) throw IndexError("predict_curve: times must be non-decreasing");
        last_t_ = t;

        while (completed_ < m_.models.size()) {
            const double t_end = m_.boundary(completed_);
            if (t < t_end - tol) break;
            const double span = static_cast<double>(m_.window_pairs[completed_]) * m_.dt;
            state_ = m_.models[completed_].apply(state_, span);
            t_boundary_ = t_end;
            ++completed_;
        }
        const double remainder = t - t_boundary_;
        // A completed boundary is evaluated as the bare operator product; the
        // sole exception is t0 itself, where the first model's zero-time
        // application (the projection onto its modes) defines the value.
        if (std::abs(remainder) <= tol && completed_ > 0) return state_.real();
        const std::size_t active = std::min(completed_, m_.models.size() - 1);
        return m_.models[active].apply(state_, std::max(remainder, 0.0)).real();
    }

private:
    const PiecewiseDmdModel& m_;
    Eigen::VectorXcd state_;
    double t_boundary_;
    double last_t_ = -std::numeric_limits<double>::infinity();
    std::size_t completed_ = 0;
};

} // namespace

Eigen::VectorXd predict_chained(const PiecewiseDmdModel& m, const Eigen::VectorXd& w0, double t) {
    return ChainWalker(m, w0).eval(t);
}

std::vector<Eigen::VectorXd> predict_curve(const PiecewiseDmdModel& m,
                                           const Eigen::VectorXd& w0,
                                           const std::vector<double>& times) {
    ChainWalker walker(m, w0);
    std::vector<Eigen::VectorXd> out;
    out.reserve(times.size());
    for (const double t : times) out.push_back(walker.eval(t));
    return out;
}

namespace {

/// Residual sum of squares of the least-squares operator K = Y X^+ at the
/// rank selected by eps, evaluated on its own training pair.
double training_sse(const DataPair& d, double eps) {
    const TruncatedSvd svd = truncated_svd(d.X, eps);
    const Eigen::MatrixXd coeff =
        svd.V * svd.sigma.cwiseInverse().asDiagonal() * (svd.U.transpose() * d.X);
    return (d.Y - d.Y * coeff).squaredNorm();
}

} // namespace

LossReport loss_dominance_report(const SnapshotSet& s, std::size_t window, double eps) {
    const std::size_t m = s.count() - 1;
    if (window < 2 || window > m)
        throw InvalidWindow("loss_dominance_report: window must satisfy 2 <= window <= pair count");

    LossReport rep;
    rep.loss_global = training_sse(build_data_pair(s), eps) / static_cast<double>(m);

    double sse = 0.0;
    for (std::size_t start = 0; start < m; start += window) {
        const std::size_t len = std::min(window, m - start);
        const double w_sse = training_sse(build_data_pair(slice_window(s, start, len + 1)), eps);
        rep.window_sse.push_back(w_sse);
        sse += w_sse;
    }
    rep.loss_piecewise = sse / static_cast<double>(m);
    return rep;
}

void export_spectrum_csv(const PiecewiseDmdModel& m, const SnapshotSet& s,
                         const std::string& path) {
    if (m.models.empty()) throw InsufficientData("export_spectrum_csv: empty model");
    if (s.dim() != m.dim) throw IndexError("export_spectrum_csv: snapshot dimension mismatch");

    csv::Writer w(path);
    w.header({"t_mid", "re_omega_1", "im_omega_1", "re_omega_2", "im_omega_2",
              "re_omega_3", "im_omega_3"});

    std::size_t start = 0;
    for (std::size_t i = 0; i < m.models.size(); ++i) {
        const DmdModel& model = m.models[i];
        const double t_start = m.t0 + static_cast<double>(start) * m.dt;
        const double t_mid =
            t_start + 0.5 * static_cast<double>(m.window_pairs[i]) * m.dt;

        const Eigen::VectorXcd b =
            model.modes_pinv * s.state(start).cast<std::complex<double>>();
        std::vector<Eigen::Index> order(static_cast<std::size_t>(b.size()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) {
            return std::abs(b(a)) > std::abs(b(c));
        });

        std::vector<double> row{t_mid};
        for (std::size_t k = 0; k < 3; ++k) {
            if (k < order.size()) {
                row.push_back(model.omegas(order[k]).real());
                row.push_back(model.omegas(order[k]).imag());
            } else {
                row.push_back(0.0);
                row.push_back(0.0);
            }
        }
        w.row(row);
        start += m.window_pairs[i];
    }
}

} // namespace dmdlab

#pragma once

// Computable error estimates for the operator fits, each paired with the
// measured quantity it is guaranteed to dominate.  Every report from
// well-posed inputs must come back satisfied — these are theorems, and a
// violation means the build is wrong, not the data.

#include <string>
#include <vector>

#include "dmdlab/solvers.hpp"
#include "dmdlab/time_varying.hpp"

namespace dmdlab {

struct BoundReport {
    std::string name;
    double computed_bound = 0.0;
    double measured = 0.0;
    double slack = 0.0; ///< computed_bound - measured
    bool satisfied = false;
    std::string note; ///< rank-deficiency / inflation / limit-case notices

    static BoundReport make(std::string name, double bound, double measured,
                            std::string note = {});
};

struct LipschitzData {
    double L = 0.0;
    bool estimated = false; ///< false: user-supplied
};

struct GammaF {
    Eigen::VectorXd gamma_i; ///< per-interval max ||C(s)||_2
    Eigen::VectorXd f_i;     ///< per-interval max ||f(s)||_2
    double gamma = 0.0;      ///< max_i gamma_i (raw sampled value)
    double f = 0.0;          ///< max_i f_i
};

/// Spectral norm by power iteration on A^T A, relative tolerance 1e-10,
/// capped at 1e4 iterations (the estimate at the cap is returned; it is a
/// lower bound converging from below).  `warm` carries the iterate between
/// related calls.
double operator_norm(const Eigen::MatrixXd& A);
double operator_norm(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                     const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply_t,
                     Eigen::Index dim, Eigen::VectorXd* warm = nullptr);

/// Matrix-free time-dependent coefficient operator, for systems whose dense
/// form would be wastefully large.
struct CoefficientOperator {
    Eigen::Index dim = 0;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> apply;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> apply_transpose;
};

/// max_t ||C(t)||_2 over [t0, t1] by dense sampling; the usual way to get a
/// Lipschitz constant for a linear system.
LipschitzData estimate_lipschitz(const std::function<Eigen::MatrixXd(double)>& C, double t0,
                                 double t1, int samples = 1001);

// --- recursive pointwise prediction-error bound -----------------------------

struct PointwiseErrorBound {
    std::vector<double> bound;        ///< B^n; long horizons may overflow to inf
    std::vector<double> log_bound;    ///< ln B^n, kept exact when B overflows
    std::vector<double> measured_sq;  ///< ||x_n - xhat_n||^2 on training data
    std::vector<double> window_residual; ///< empirical sup residual per window
    bool dominates = false;           ///< bound >= measured at every step
};

/// B^0 = E0, B^n = (1 + e^{L dt}) B^{n-1} + rho(t_n)^2, with rho the
/// per-window sup of ||x_{i+1} - K x_i||_2 and K the window's one-step map.
/// The comparison against the measured squared error runs in log space so an
/// astronomically large (overflowed) bound still compares correctly.
PointwiseErrorBound pointwise_error_bound(const PiecewiseDmdModel& models, const SnapshotSet& s,
                                          const LipschitzData& L, double E0);

// --- rank-truncation bounds --------------------------------------------------

/// ||Y X^+ - Y X_r^+||_2 <= sigma_max(Y) / sigma_min(X).
BoundReport rank_truncation_bound(const DataPair& d, Eigen::Index r);

/// Direction-resolved version: bound^2 = sum_{k>r} (sigma_max(Y)^2 /
/// sigma_k(X)^2) (u_k^T x)^2 against ||K x - K_r x||_2.
BoundReport pointwise_rank_bound(const DataPair& d, Eigen::Index r, const Eigen::VectorXd& x);

// --- pseudoinverse column update ---------------------------------------------

struct PinvAppendResult {
    Eigen::MatrixXd pinv; ///< (m+1) x N pseudoinverse of [Xm, u]
    double c = 0.0;       ///< 1 / (||u||^2 - u^T Xm (Xm^T Xm)^{-1} Xm^T u)
};

/// Block update of the pseudoinverse when a column u is appended to the full-
/// column-rank Xm.  c >= 1/||u||^2 always, with equality iff u is orthogonal
/// to range(Xm).  Throws RankCollapse when u (numerically) lies in range(Xm).
PinvAppendResult pinv_append(const Eigen::MatrixXd& Xm_pinv, const Eigen::MatrixXd& Xm,
                             const Eigen::VectorXd& u);

/// Operator-norm perturbation when the trailing data column pair (u, v) is
/// dropped.  Uses the tightened formula when ||Xm^T u|| <= 1e-12 ||u||.
BoundReport column_deletion_bound(const Eigen::MatrixXd& Xm, const Eigen::MatrixXd& Ym,
                                  const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// --- time-shift norm bound ----------------------------------------------------

struct TimeShiftReport {
    BoundReport report;
    GammaF gf;
    double gamma_inflated = 0.0; ///< gamma with the 1% sampling-safety factor
    double f_inflated = 0.0;
};

/// ||Y||_2 <= exp(gamma^2 dt / 2) sqrt(m f^2 / gamma^2 + sum_i sigma_i(X)^2),
/// gamma and f from dense sampling (>= 100 points per step) with a 1% safety
/// inflation.  The f = 0 case drops the m f^2/gamma^2 term; f > 0 with
/// gamma < 1e-12 reports +infinity with a notice.
TimeShiftReport time_shift_bound(const LinearSystemConfig& cfg, const DataPair& d);

/// Same bound with matrix-free coefficient applications (t0/dt locate the
/// data columns in time; forcing may be null for f = 0).
TimeShiftReport time_shift_bound(const CoefficientOperator& C,
                                 const std::function<Eigen::VectorXd(double)>& forcing,
                                 const DataPair& d, double t0, double dt);

/// Constant-coefficient refinement (f = 0): kappa_2(Q) e^{lambda_1 dt}
/// sigma_max(X) with lambda_1 the largest real part of the eigenvalues of C.
BoundReport time_shift_bound_constant(const Eigen::MatrixXd& C, const DataPair& d, double dt);

} // namespace dmdlab

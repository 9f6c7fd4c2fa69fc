#pragma once

// Best-fit linear operator identification from snapshot pairs.
//
// Given X, Y with y_i = x_{i+1}, the fit computes a truncated SVD
// X ~ U_r S_r V_r^T, the reduced operator K_hat = U_r^T Y V_r S_r^{-1}, its
// eigendecomposition K_hat Q = Q diag(lambda), the full-space modes
// Phi = U_r Q, and continuous-time frequencies omega_k = log(lambda_k)/dt.
// Prediction evaluates Phi exp(t*Omega) Phi^+ x0 and returns the real part.

#include <complex>
#include <functional>

#include <Eigen/Dense>

#include "dmdlab/snapshots.hpp"

namespace dmdlab {

struct TruncatedSvd {
    Eigen::MatrixXd U;     ///< dim x r, orthonormal columns
    Eigen::VectorXd sigma; ///< r strictly positive singular values, descending
    Eigen::MatrixXd V;     ///< cols x r, orthonormal columns
    double tail_energy = 0.0; ///< sum_{k>r} s_k^2 / sum_k s_k^2 of the input

    Eigen::Index rank() const { return sigma.size(); }
};

/// Smallest rank whose relative tail energy drops below eps (0 < eps < 1).
/// Singular values tied with sigma_r at the cut are kept as well, so the
/// result never depends on how a degenerate group is ordered.
TruncatedSvd truncated_svd(const Eigen::MatrixXd& X, double eps);

struct DmdModel {
    TruncatedSvd svd;            ///< of the input matrix X
    Eigen::MatrixXd K_hat;       ///< r x r reduced operator
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd eigenvectors; ///< Q, columns paired with eigenvalues
    Eigen::MatrixXcd modes;        ///< Phi = U_r Q
    Eigen::MatrixXcd modes_pinv;   ///< Phi^+ = Q^{-1} U_r^T
    Eigen::VectorXcd omegas;       ///< log(lambda)/dt, principal branch; 0 for dead modes
    Eigen::Array<bool, Eigen::Dynamic, 1> dead; ///< |lambda| < 1e-14: excluded from prediction
    double dt = 0.0;

    Eigen::Index rank() const { return eigenvalues.size(); }

    /// Phi exp(tau*Omega) Phi^+ w with dead modes dropped; the shared kernel
    /// behind every prediction routine.
    Eigen::VectorXcd apply(const Eigen::VectorXcd& w, double tau) const;
};

/// Threshold below which an eigenvalue is treated as a dead mode.
inline constexpr double kDeadModeTol = 1e-14;

/// Fit the rank-truncated operator from one snapshot pair set.
/// Throws DegenerateInput for X = 0, InsufficientData for empty pairs, and
/// DefectiveOperator when cond(Q) exceeds 1e12.
DmdModel fit_standard(const DataPair& d, double eps, double dt);

/// Real part of Phi exp(t Omega) Phi^+ x0; t is absolute with the fit's
/// first snapshot at t = 0.
Eigen::VectorXd predict_at(const DmdModel& m, const Eigen::VectorXd& x0, double t);

/// Mean squared one-step residual (1/m) sum_i ||y_i - K x_i||^2.
double mse_loss(const Eigen::MatrixXd& K, const DataPair& d);
double mse_loss(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                const DataPair& d);

/// One-step training MSE of a fitted model (its dt-step map applied to X).
double model_training_mse(const DmdModel& m, const DataPair& d);

/// Spectrum export: one row per mode with eigenvalue, frequency, and the
/// complex amplitude Phi^+ x0 (re, im, abs).
void export_model_csv(const DmdModel& m, const Eigen::VectorXd& x0, const std::string& path);

} // namespace dmdlab

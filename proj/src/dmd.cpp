#include "dmdlab/dmd.hpp"

#include <cmath>

#include "dmdlab/csv.hpp"

namespace dmdlab {

TruncatedSvd truncated_svd(const Eigen::MatrixXd& X, double eps) {
    if (X.size() == 0) throw InsufficientData("truncated_svd: empty matrix");
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidCoefficient("truncated_svd: eps must lie in (0,1)");
    if (X.norm() == 0.0) throw DegenerateInput("truncated_svd: zero matrix has no dominant subspace");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();

    const double total = s.squaredNorm();
    Eigen::Index r = 0;
    double tail = total;
    while (r < s.size() && tail / total >= eps) {
        tail -= s(r) * s(r);
        ++r;
    }
    if (r == 0) r = 1; // eps close to 1: always keep the dominant direction

    // A degenerate group must not be split: include everything tied with s_r.
    const double tie_tol = 1e-12 * s(0);
    while (r < s.size() && s(r) > 0.0 && std::abs(s(r) - s(r - 1)) <= tie_tol) ++r;

    // Never retain exact zeros, whatever the tail rule asked for.
    while (r > 1 && s(r - 1) <= 0.0) --r;

    TruncatedSvd out;
    out.U = svd.matrixU().leftCols(r);
    out.sigma = s.head(r);
    out.V = svd.matrixV().leftCols(r);
    out.tail_energy = s.size() > r ? s.tail(s.size() - r).squaredNorm() / total : 0.0;
    return out;
}

DmdModel fit_standard(const DataPair& d, double eps, double dt) {
    if (d.X.cols() < 1 || d.Y.cols() < 1) throw InsufficientData("fit_standard: no snapshot pairs");
    if (d.X.rows() != d.Y.rows() || d.X.cols() != d.Y.cols())
        throw IndexError("fit_standard: X and Y shapes differ");
    if (!(dt > 0.0)) throw InvalidCoefficient("fit_standard: dt must be positive");

    DmdModel m;
    m.dt = dt;
    m.svd = truncated_svd(d.X, eps);
    const Eigen::Index r = m.svd.rank();

    m.K_hat = m.svd.U.transpose() * d.Y * m.svd.V * m.svd.sigma.cwiseInverse().asDiagonal();

    Eigen::EigenSolver<Eigen::MatrixXd> eig(m.K_hat);
    if (eig.info() != Eigen::Success) throw DefectiveOperator("fit_standard: eigensolver failed");
    m.eigenvalues = eig.eigenvalues();
    m.eigenvectors = eig.eigenvectors();

    // Diagonalizability check: the prediction formula inverts Q.
    Eigen::JacobiSVD<Eigen::MatrixXcd> qsvd(m.eigenvectors);
    const double smin = qsvd.singularValues()(r - 1);
    const double smax = qsvd.singularValues()(0);
    if (!(smin > 0.0) || smax / smin > 1e12)
        throw DefectiveOperator("fit_standard: reduced operator is numerically non-diagonalizable");

    m.modes = m.svd.U * m.eigenvectors;
    // Phi = U Q with orthonormal U and invertible Q, so Phi^+ = Q^{-1} U^T.
    Eigen::PartialPivLU<Eigen::MatrixXcd> qlu(m.eigenvectors);
    m.modes_pinv = qlu.solve(m.svd.U.transpose().cast<std::complex<double>>());

    m.omegas.resize(r);
    m.dead.resize(r);
    for (Eigen::Index k = 0; k < r; ++k) {
        const std::complex<double> lambda = m.eigenvalues(k);
        m.dead(k) = std::abs(lambda) < kDeadModeTol;
        m.omegas(k) = m.dead(k) ? std::complex<double>(0.0, 0.0) : std::log(lambda) / dt;
    }
    return m;
}

Eigen::VectorXcd DmdModel::apply(const Eigen::VectorXcd& w, double tau) const {
    if (w.size() != modes.rows()) throw IndexError("DmdModel::apply: state dimension mismatch");
    Eigen::VectorXcd b = modes_pinv * w;
    for (Eigen::Index k = 0; k < b.size(); ++k)
        b(k) = dead(k) ? std::complex<double>(0.0, 0.0) : b(k) * std::exp(tau * omegas(k));
    return modes * b;
}

Eigen::VectorXd predict_at(const DmdModel& m, const Eigen::VectorXd& x0, double t) {
    return m.apply(x0.cast<std::complex<double>>(), t).real();
}

double mse_loss(const Eigen::MatrixXd& K, const DataPair& d) {
    if (d.pairs() == 0) throw InsufficientData("mse_loss: empty data");
    return (d.Y - K * d.X).squaredNorm() / static_cast<double>(d.pairs());
}

double mse_loss(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                const DataPair& d) {
    if (d.pairs() == 0) throw InsufficientData("mse_loss: empty data");
    double sse = 0.0;
    for (Eigen::Index i = 0; i < d.pairs(); ++i)
        sse += (d.Y.col(i) - apply(d.X.col(i))).squaredNorm();
    return sse / static_cast<double>(d.pairs());
}

double model_training_mse(const DmdModel& m, const DataPair& d) {
    return mse_loss([&](const Eigen::VectorXd& x) { return predict_at(m, x, m.dt); }, d);
}

void export_model_csv(const DmdModel& m, const Eigen::VectorXd& x0, const std::string& path) {
    csv::Writer w(path);
    w.header({"mode", "re_lambda", "im_lambda", "re_omega", "im_omega",
              "re_amplitude", "im_amplitude", "abs_amplitude", "dead"});
    const Eigen::VectorXcd b = m.modes_pinv * x0.cast<std::complex<double>>();
    for (Eigen::Index k = 0; k < m.rank(); ++k) {
        w.row({static_cast<double>(k), m.eigenvalues(k).real(), m.eigenvalues(k).imag(),
               m.omegas(k).real(), m.omegas(k).imag(), b(k).real(), b(k).imag(),
               std::abs(b(k)), m.dead(k) ? 1.0 : 0.0});
    }
}

} // namespace dmdlab

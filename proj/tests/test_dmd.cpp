#include <doctest.h>

#include <dmdlab/dmd.hpp>
#include <dmdlab/errors.hpp>
#include <dmdlab/snapshots.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <random>

using dmdlab::DataPair;
using dmdlab::DmdModel;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

// Trajectory x_{i+1} = A x_i packed as a DataPair.
DataPair linear_trajectory(const Eigen::MatrixXd& A, const Eigen::VectorXd& x0,
                           int steps) {
  Eigen::MatrixXd states(A.rows(), steps + 1);
  states.col(0) = x0;
  for (int i = 0; i < steps; ++i) states.col(i + 1) = A * states.col(i);
  DataPair d;
  d.X = states.leftCols(steps);
  d.Y = states.rightCols(steps);
  return d;
}

}  // namespace

TEST_SUITE("dmd") {

TEST_CASE("truncation keeps the smallest rank under the energy budget") {
  // Singular values 3 and 1: tail energy of rank 1 is 1/10 = 0.1 < 0.2.
  Eigen::MatrixXd X = Eigen::Vector2d(3.0, 1.0).asDiagonal();
  auto svd = dmdlab::truncated_svd(X, 0.2);
  CHECK(svd.rank() == 1);
  CHECK(svd.sigma(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(svd.tail_energy == doctest::Approx(0.1).epsilon(1e-12));

  // A tighter budget keeps both.
  auto full = dmdlab::truncated_svd(X, 0.05);
  CHECK(full.rank() == 2);
  CHECK(full.tail_energy == doctest::Approx(0.0));
}

TEST_CASE("rank-one outer product") {
  Eigen::VectorXd u(3), v(4);
  u << 1.0, 2.0, 2.0;   // norm 3
  v << 0.0, 3.0, 0.0, 4.0;  // norm 5
  Eigen::MatrixXd X = u * v.transpose();
  auto svd = dmdlab::truncated_svd(X, 1e-10);
  REQUIRE(svd.rank() == 1);
  CHECK(svd.sigma(0) == doctest::Approx(15.0).epsilon(1e-12));
  // Reconstruction is exact at full numerical rank.
  Eigen::MatrixXd rec = svd.U * svd.sigma.asDiagonal() * svd.V.transpose();
  CHECK((rec - X).norm() <= 1e-12 * X.norm());
}

TEST_CASE("dense truncation matches a full SVD oracle") {
  Eigen::MatrixXd X = gaussian(50, 20, 123u);
  Eigen::JacobiSVD<Eigen::MatrixXd> oracle(
      X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  auto svd = dmdlab::truncated_svd(X, 1e-6);
  REQUIRE(svd.rank() == 20);  // Gaussian matrices are full rank
  for (Eigen::Index k = 0; k < 20; ++k)
    CHECK(svd.sigma(k) ==
          doctest::Approx(oracle.singularValues()(k)).epsilon(1e-10));
  CHECK((svd.U.transpose() * svd.U - Eigen::MatrixXd::Identity(20, 20)).norm()
        <= 1e-10);
  CHECK((svd.V.transpose() * svd.V - Eigen::MatrixXd::Identity(20, 20)).norm()
        <= 1e-10);
}

TEST_CASE("tail energy shrinks as rank grows") {
  Eigen::MatrixXd X = gaussian(30, 12, 7u);
  double total = X.squaredNorm();
  Eigen::JacobiSVD<Eigen::MatrixXd> oracle(X);
  // Walk eps downward; the retained rank is non-decreasing and the reported
  // tail energy matches the oracle partial sums.
  Eigen::Index last_rank = 0;
  for (double eps : {0.5, 0.1, 0.01, 1e-4, 1e-8}) {
    auto svd = dmdlab::truncated_svd(X, eps);
    CHECK(svd.rank() >= last_rank);
    last_rank = svd.rank();
    double tail = 0.0;
    for (Eigen::Index k = svd.rank(); k < 12; ++k)
      tail += oracle.singularValues()(k) * oracle.singularValues()(k);
    CHECK(svd.tail_energy == doctest::Approx(tail / total).epsilon(1e-10));
    CHECK(svd.tail_energy < eps);
  }
}

TEST_CASE("degenerate truncation inputs") {
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 3);
  CHECK_THROWS_AS(dmdlab::truncated_svd(zero, 0.1), dmdlab::DegenerateInput);
  Eigen::MatrixXd ok = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(dmdlab::truncated_svd(ok, 0.0), dmdlab::InvalidCoefficient);
  CHECK_THROWS_AS(dmdlab::truncated_svd(ok, 1.0), dmdlab::InvalidCoefficient);
}

TEST_CASE("scalar doubling map") {
  DataPair d;
  d.X.resize(1, 2);
  d.Y.resize(1, 2);
  d.X << 1.0, 2.0;
  d.Y << 2.0, 4.0;
  auto m = dmdlab::fit_standard(d, 1e-8, 1.0);
  REQUIRE(m.rank() == 1);
  CHECK(m.eigenvalues(0).real() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(m.eigenvalues(0).imag()) <= 1e-12);
  CHECK(m.omegas(0).real() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Three steps of the map from x0 = 1.
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  auto x3 = dmdlab::predict_at(m, x0, 3.0);
  CHECK(x3(0) == doctest::Approx(8.0).epsilon(1e-10));
}

TEST_CASE("planar rotation spectrum and forecast") {
  const double theta = 0.1;
  Eigen::Matrix2d A;
  A << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.0;
  auto d = linear_trajectory(A, x0, 19);  // 20 snapshots
  const double dt = 0.5;
  auto m = dmdlab::fit_standard(d, 1e-12, dt);
  REQUIRE(m.rank() == 2);

  // Eigenvalues come out in conjugate pairs e^{+-i theta}.
  std::complex<double> expect_pos = std::polar(1.0, theta);
  double best = 1e9;
  for (Eigen::Index k = 0; k < 2; ++k)
    best = std::min(best, std::abs(m.eigenvalues(k) - expect_pos));
  CHECK(best <= 1e-10);
  for (Eigen::Index k = 0; k < 2; ++k)
    CHECK(std::abs(std::abs(m.eigenvalues(k)) - 1.0) <= 1e-10);

  // Forecast at a non-grid time against the exact matrix exponential.
  Eigen::Matrix2d gen;  // A = exp(gen * dt)
  gen << 0.0, -theta / dt, theta / dt, 0.0;
  const double t = 1.0;
  Eigen::Matrix2d flow = (t * gen).exp();
  Eigen::VectorXd truth = flow * x0;
  auto pred = dmdlab::predict_at(m, x0, t);
  CHECK((pred - truth).norm() <= 1e-8);
}

TEST_CASE("prediction at t = 0 is the subspace projection") {
  Eigen::MatrixXd A = gaussian(6, 6, 31u) * 0.2;
  auto d = linear_trajectory(A, gaussian(6, 1, 32u), 12);
  auto m = dmdlab::fit_standard(d, 1e-10, 0.1);
  Eigen::VectorXd w = gaussian(6, 1, 33u);
  Eigen::VectorXd proj = m.svd.U * (m.svd.U.transpose() * w);
  CHECK((dmdlab::predict_at(m, w, 0.0) - proj).norm() <= 1e-10);
}

TEST_CASE("fit invariants on a generic stable system") {
  Eigen::MatrixXd A = gaussian(8, 8, 55u);
  A *= 0.9 / std::abs(A.eigenvalues().cwiseAbs().maxCoeff());
  auto d = linear_trajectory(A, gaussian(8, 1, 56u).cwiseAbs() + Eigen::VectorXd::Ones(8), 30);
  const double dt = 0.05;
  auto m = dmdlab::fit_standard(d, 1e-13, dt);

  // Eigen-decomposition actually diagonalizes the reduced operator.
  Eigen::MatrixXcd lhs = m.K_hat.cast<std::complex<double>>() * m.eigenvectors;
  Eigen::MatrixXcd rhs = m.eigenvectors * m.eigenvalues.asDiagonal();
  CHECK((lhs - rhs).norm() <= 1e-8 * m.K_hat.norm());

  // Frequencies invert back to the eigenvalues.
  for (Eigen::Index k = 0; k < m.rank(); ++k) {
    if (m.dead(k)) continue;
    std::complex<double> back = std::exp(m.omegas(k) * dt);
    CHECK(std::abs(back - m.eigenvalues(k)) <= 1e-12);
  }

  // Modes and their pseudoinverse are mutually consistent.
  Eigen::MatrixXcd gram = m.modes_pinv * m.modes;
  CHECK((gram - Eigen::MatrixXcd::Identity(m.rank(), m.rank())).norm() <= 1e-8);
}

TEST_CASE("full-rank fit reproduces the generating operator") {
  Eigen::MatrixXd A = gaussian(5, 5, 77u) * 0.3;
  // Rich data: several trajectories stacked so X has full row rank.
  Eigen::MatrixXd X = gaussian(5, 25, 78u);
  DataPair d;
  d.X = X;
  d.Y = A * X;
  auto m = dmdlab::fit_standard(d, 1e-13, 1.0);
  REQUIRE(m.rank() == 5);
  Eigen::MatrixXcd rebuilt =
      m.modes * m.eigenvalues.asDiagonal() * m.modes_pinv;
  CHECK((rebuilt - A.cast<std::complex<double>>()).norm() <= 1e-8 * A.norm());
}

TEST_CASE("one-step map of the fit matches its own spectrum") {
  Eigen::MatrixXd A = gaussian(6, 6, 81u) * 0.4;
  auto d = linear_trajectory(A, gaussian(6, 1, 82u), 20);
  auto m = dmdlab::fit_standard(d, 1e-12, 0.2);
  // Applying the fitted map for exactly dt equals multiplying by lambda in
  // mode space.
  Eigen::VectorXcd w = d.X.col(3).cast<std::complex<double>>();
  Eigen::VectorXcd one_step = m.apply(w, m.dt);
  Eigen::VectorXcd via_spectrum =
      m.modes * (m.eigenvalues.array() * (m.modes_pinv * w).array()).matrix();
  CHECK((one_step - via_spectrum).norm() <= 1e-10);
}

TEST_CASE("mse loss definitions") {
  DataPair d;
  d.X = gaussian(4, 9, 91u);
  Eigen::MatrixXd A = gaussian(4, 4, 92u);
  d.Y = A * d.X;

  SUBCASE("exact operator scores zero") {
    CHECK(dmdlab::mse_loss(A, d) <= 1e-20);
  }

  SUBCASE("zero operator scores the mean target energy") {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(4, 4);
    double expect = d.Y.squaredNorm() / static_cast<double>(d.pairs());
    CHECK(dmdlab::mse_loss(Z, d) == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("matrix and functional forms agree") {
    Eigen::MatrixXd K = gaussian(4, 4, 93u);
    auto fn = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return K * x; };
    CHECK(dmdlab::mse_loss(K, d) ==
          doctest::Approx(dmdlab::mse_loss(fn, d)).epsilon(1e-12));
  }

  SUBCASE("least-squares fit is a local optimum") {
    auto m = dmdlab::fit_standard(d, 1e-13, 1.0);
    double base = dmdlab::model_training_mse(m, d);
    // Any perturbation of the recovered operator does no better.
    Eigen::MatrixXd K = (m.modes * m.eigenvalues.asDiagonal() * m.modes_pinv)
                            .real();
    std::mt19937_64 rng(94u);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::MatrixXd P(4, 4);
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) P(i, j) = g(rng);
      P *= 1e-4 / P.norm();
      const Eigen::MatrixXd perturbed = K + P;
      CHECK(dmdlab::mse_loss(perturbed, d) >= base - 1e-15);
    }
  }
}

TEST_CASE("empty and degenerate fits are rejected") {
  DataPair empty;
  empty.X.resize(3, 0);
  empty.Y.resize(3, 0);
  CHECK_THROWS_AS(dmdlab::fit_standard(empty, 1e-6, 0.1),
                  dmdlab::InsufficientData);

  DataPair zero;
  zero.X = Eigen::MatrixXd::Zero(3, 4);
  zero.Y = Eigen::MatrixXd::Zero(3, 4);
  CHECK_THROWS_AS(dmdlab::fit_standard(zero, 1e-6, 0.1),
                  dmdlab::DegenerateInput);
}

}  // TEST_SUITE

#include <doctest.h>

#include <dmdlab/errors.hpp>
#include <dmdlab/solvers.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

using dmdlab::Advection1dConfig;
using dmdlab::AdvDiff2dConfig;
using dmdlab::LinearSystemConfig;
using dmdlab::NavierStokesConfig;

namespace {

double mass_1d(const Eigen::VectorXd& u, double dx) { return u.sum() * dx; }

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("advection with zero speed is frozen") {
  Advection1dConfig cfg;
  cfg.c = 0.0;
  cfg.t_final = 0.5;
  auto s = dmdlab::solve_advection_1d(cfg);
  for (std::size_t j = 1; j < s.count(); ++j)
    CHECK((s.state(j) - s.state(0)).norm() == 0.0);
}

TEST_CASE("advection production run: shape, mass, and periodicity") {
  Advection1dConfig cfg;  // defaults are the production setup
  double outflux = 0.0;
  auto s = dmdlab::solve_advection_1d(cfg, &outflux);
  REQUIRE(s.dim() == 400);
  REQUIRE(s.count() == 801);

  const double m0 = mass_1d(s.state(0), cfg.dx);
  for (std::size_t j : {100u, 400u, 800u}) {
    double drift = std::abs(mass_1d(s.state(j), cfg.dx) - m0);
    CHECK(drift <= 1e-10 * m0);  // support stays interior throughout
  }
  CHECK(std::abs(outflux) <= 1e-10 * m0);

  // The velocity integrates to zero over one period, so t = 4 must return
  // to the initial profile up to the scheme's numerical diffusion.
  Eigen::VectorXd back = s.state(400);
  CHECK((back - s.state(0)).lpNorm<Eigen::Infinity>() <= 0.15);
  // And it genuinely moved in between (half period, peak displacement).
  CHECK((s.state(200) - s.state(0)).lpNorm<Eigen::Infinity>() > 0.3);
}

TEST_CASE("advection tracks the characteristics oracle") {
  Advection1dConfig cfg;
  cfg.t_final = 2.0;
  auto s = dmdlab::solve_advection_1d(cfg);
  auto g = dmdlab::advection_1d_geometry(cfg);
  // Exact solution of the transport equation: u0 shifted by the integral of
  // the velocity, integral of 2 sin(pi t/2) = (4/pi)(1 - cos(pi t/2)).
  const double shift = (4.0 / M_PI) * (1.0 - std::cos(M_PI * 1.0));
  const auto idx = static_cast<std::size_t>(2.0 / cfg.dt);
  Eigen::VectorXd exact(g.axes[0].size());
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    const double x = g.axes[0](i) - shift;
    exact(i) = std::exp(-0.5 * x * x);
  }
  CHECK((s.state(idx) - exact).lpNorm<Eigen::Infinity>() <= 0.15);
}

TEST_CASE("advection rejects CFL violations and names the step") {
  Advection1dConfig cfg;
  cfg.dt = 0.05;  // max CFL = 2 * 0.05 / 0.05 = 2
  try {
    dmdlab::solve_advection_1d(cfg);
    FAIL("expected StabilityError");
  } catch (const dmdlab::StabilityError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("advection-diffusion with nothing driving it is frozen") {
  AdvDiff2dConfig cfg;
  cfg.vx = [](double) { return 0.0; };
  cfg.vy = [](double) { return 0.0; };
  cfg.diffusivity = 0.0;
  cfg.nx = 12;
  cfg.ny = 12;
  cfg.t_final = 0.2;
  auto s = dmdlab::solve_advdiff_2d(cfg);
  for (std::size_t j = 1; j < s.count(); ++j)
    CHECK((s.state(j) - s.state(0)).norm() == 0.0);
}

TEST_CASE("pure diffusion spreads variance at the exact rate") {
  AdvDiff2dConfig cfg;  // production grid: 50x50, dt = 0.01, D = 1e-3
  cfg.vx = [](double) { return 0.0; };
  cfg.vy = [](double) { return 0.0; };
  auto s = dmdlab::solve_advdiff_2d(cfg);
  REQUIRE(s.dim() == 2500);
  REQUIRE(s.count() == 1001);

  auto g = dmdlab::advdiff_2d_geometry(cfg);
  auto variance = [&](const Eigen::VectorXd& u) {
    double mass = 0.0, second = 0.0;
    for (Eigen::Index i = 0; i < 50; ++i)
      for (Eigen::Index j = 0; j < 50; ++j) {
        const double r2 = g.axes[0](i) * g.axes[0](i) + g.axes[1](j) * g.axes[1](j);
        mass += u(i * 50 + j);
        second += r2 * u(i * 50 + j);
      }
    return second / mass;
  };
  const double growth = variance(s.state(1000)) - variance(s.state(0));
  const double expect = 4.0 * cfg.diffusivity * 10.0;
  CHECK(growth == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("advection-diffusion blow-up is caught") {
  AdvDiff2dConfig cfg;
  cfg.nx = 20;
  cfg.ny = 20;
  cfg.vx = [](double) { return 200.0; };  // Courant 2 on the dx = 1 grid
  cfg.vy = [](double) { return 0.0; };
  cfg.t_final = 5.0;
  CHECK_THROWS_AS(dmdlab::solve_advdiff_2d(cfg), dmdlab::StabilityError);
}

TEST_CASE("channel flow geometry at production resolution") {
  NavierStokesConfig cfg;  // h = 0.02 on [0,2]x[0,1]
  auto g = dmdlab::navier_stokes_geometry(cfg);
  CHECK(g.value_count() == 5000);
}

TEST_CASE("channel flow stays divergence free") {
  NavierStokesConfig cfg;
  cfg.lx = 1.0;
  cfg.ly = 0.5;
  cfg.h = 0.05;
  cfg.dt = 2e-3;
  cfg.t_final = 0.1;
  cfg.cyl_x = 0.25;
  cfg.cyl_y = 0.25;
  cfg.cyl_r = 0.08;
  dmdlab::NsDiagnostics diag;
  auto s = dmdlab::solve_navier_stokes(cfg, &diag);
  REQUIRE(s.count() == 51);
  REQUIRE(diag.max_divergence.size() == 50);
  for (double d : diag.max_divergence) CHECK(d <= 1e-8);
  // The cylinder leaves a zero-speed footprint in every snapshot.
  CHECK(s.state(25).minCoeff() == 0.0);
  // Flow left the cylinder wake non-uniform.
  CHECK(s.state(50).maxCoeff() > 0.5);
}

TEST_CASE("unobstructed viscous channel relaxes to uniform flow") {
  NavierStokesConfig cfg;
  cfg.lx = 1.0;
  cfg.ly = 0.5;
  cfg.h = 0.05;
  cfg.dt = 2e-3;
  cfg.t_final = 1.0;
  cfg.nu = 0.1;
  cfg.cyl_x = -5.0;  // no obstacle anywhere near the domain
  cfg.cyl_r = 0.0;
  auto s = dmdlab::solve_navier_stokes(cfg);
  Eigen::VectorXd last = s.state(s.count() - 1);
  CHECK((last.array() - 1.0).abs().maxCoeff() <= 0.01);
}

TEST_CASE("stalled pressure solve reports its residual") {
  NavierStokesConfig cfg;
  cfg.lx = 1.0;
  cfg.ly = 0.5;
  cfg.h = 0.05;
  cfg.dt = 2e-3;
  cfg.t_final = 0.05;
  cfg.cyl_x = 0.25;
  cfg.cyl_y = 0.25;
  cfg.cyl_r = 0.08;
  cfg.poisson_max_iter = 1;
  try {
    dmdlab::solve_navier_stokes(cfg);
    FAIL("expected SolverError");
  } catch (const dmdlab::SolverError& e) {
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("linear system with no dynamics is constant") {
  LinearSystemConfig cfg;
  cfg.C = [](double) { return Eigen::MatrixXd::Zero(2, 2); };
  cfg.x0 = Eigen::Vector2d(0.3, -4.0);
  cfg.t_final = 0.25;
  auto s = dmdlab::solve_linear_system(cfg);
  for (std::size_t j = 0; j < s.count(); ++j)
    CHECK((s.state(j) - cfg.x0).norm() == 0.0);
}

TEST_CASE("rotating system preserves the norm") {
  LinearSystemConfig cfg;
  cfg.C = dmdlab::rotating_coefficients(0.1);
  cfg.x0 = Eigen::Vector2d(1.0, 0.0);
  auto s = dmdlab::solve_linear_system(cfg);
  REQUIRE(s.count() == 1001);
  for (std::size_t j : {1u, 250u, 500u, 1000u})
    CHECK(std::abs(s.state(j).norm() - 1.0) <= 1e-8);

  // Closed form: rotation by theta(t) = t + 0.05 t^2.
  const double theta = 1.0 + 0.05;
  Eigen::Vector2d expect(std::cos(theta), -std::sin(theta));
  CHECK((s.state(1000) - expect).norm() <= 1e-8);
}

TEST_CASE("scalar decay matches the exponential") {
  LinearSystemConfig cfg;
  cfg.C = [](double) {
    Eigen::MatrixXd c(1, 1);
    c << -1.0;
    return c;
  };
  cfg.x0 = Eigen::VectorXd::Ones(1);
  cfg.t_final = 1.0;
  auto s = dmdlab::solve_linear_system(cfg);
  for (std::size_t j : {100u, 500u, 1000u}) {
    const double t = 1e-3 * static_cast<double>(j);
    CHECK(s.state(j)(0) == doctest::Approx(std::exp(-t)).epsilon(1e-10));
  }
}

TEST_CASE("constant-coefficient flow matches the matrix exponential") {
  Eigen::MatrixXd C(3, 3);
  C << -0.4, 0.9, 0.1, -0.9, -0.4, 0.2, 0.0, 0.1, -0.2;
  LinearSystemConfig cfg;
  cfg.C = [C](double) { return C; };
  cfg.x0 = Eigen::Vector3d(1.0, -0.5, 0.25);
  auto s = dmdlab::solve_linear_system(cfg);
  Eigen::MatrixXd flow = C.exp();
  Eigen::VectorXd truth = flow * cfg.x0;
  CHECK((s.state(1000) - truth).norm() <= 1e-8);
}

TEST_CASE("forcing enters the integration") {
  LinearSystemConfig cfg;
  cfg.C = [](double) { return Eigen::MatrixXd::Zero(1, 1); };
  cfg.forcing = [](double t) {
    Eigen::VectorXd f(1);
    f << std::cos(t);
    return f;
  };
  cfg.x0 = Eigen::VectorXd::Zero(1);
  cfg.t_final = 1.0;
  auto s = dmdlab::solve_linear_system(cfg);
  CHECK(s.state(1000)(0) == doctest::Approx(std::sin(1.0)).epsilon(1e-10));
}

TEST_CASE("solves are deterministic") {
  LinearSystemConfig cfg;
  cfg.C = dmdlab::rotating_coefficients(0.1);
  cfg.x0 = Eigen::Vector2d(1.0, 0.0);
  auto a = dmdlab::solve_linear_system(cfg);
  auto b = dmdlab::solve_linear_system(cfg);
  CHECK((a.states() - b.states()).norm() == 0.0);

  Advection1dConfig acfg;
  acfg.t_final = 0.5;
  auto c = dmdlab::solve_advection_1d(acfg);
  auto d = dmdlab::solve_advection_1d(acfg);
  CHECK((c.states() - d.states()).norm() == 0.0);
}

}  // TEST_SUITE

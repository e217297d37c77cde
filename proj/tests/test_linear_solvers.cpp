#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "platesim/linear_solvers.hpp"

using namespace platesim;

namespace {

constexpr double kPi = 3.14159265358979323846;

SpectralField unit_mode(const BasisPtr& b, Index k, double amp = 1.0) {
  SpectralField f = zero_field(b);
  f.coef[k] = amp;
  return f;
}

}  // namespace

TEST_CASE("heat: homogeneous decay is exact per mode") {
  auto b = build_basis({{1.0}}, {6});
  HeatProblem hp;
  hp.diffusivity = 0.8;
  hp.dt = 1e-2;
  hp.t_end = 1.0;
  auto traj = solve_heat(unit_mode(b, 2), hp);
  const double lam = b->eigenvalues()[2];
  for (size_t i = 0; i < traj.times.size(); i += 10) {
    const double ref = std::exp(-hp.diffusivity * lam * traj.times[i]);
    CHECK(traj.theta[i].coef[2] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("heat: constant source reproduces the steady approach exactly") {
  auto b = build_basis({{1.0}}, {4});
  const double kappa = 1.3, c = 0.7;
  const double lam = b->eigenvalues()[0];
  HeatProblem hp;
  hp.diffusivity = kappa;
  hp.dt = 5e-3;
  hp.t_end = 2.0;
  hp.source = [&](double) { return unit_mode(b, 0, c); };
  auto traj = solve_heat(zero_field(b), hp);
  for (size_t i = 0; i < traj.times.size(); i += 37) {
    const double ref = c / (kappa * lam) * (1.0 - std::exp(-kappa * lam * traj.times[i]));
    CHECK(std::abs(traj.theta[i].coef[0] - ref) <= 1e-13 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("heat: order-2 convergence for a time-dependent source") {
  auto b = build_basis({{1.0}}, {3});
  const double kappa = 0.5;
  const double lam = b->eigenvalues()[0];
  auto run = [&](double dt) {
    HeatProblem hp;
    hp.diffusivity = kappa;
    hp.dt = dt;
    hp.t_end = 1.0;
    // manufactured theta(t) = sin(t) phi_1
    hp.source = [&](double t) { return unit_mode(b, 0, std::cos(t) + kappa * lam * std::sin(t)); };
    auto traj = solve_heat(zero_field(b), hp);
    return std::abs(traj.theta.back().coef[0] - std::sin(1.0));
  };
  const double e1 = run(1e-2), e2 = run(5e-3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("wave: constant coefficient standing mode and energy drift") {
  auto b = build_basis({{1.0}}, {8});
  const double c2 = 2.0;
  const double lam = b->eigenvalues()[1];
  WaveProblem wp;
  wp.dt = 1e-3;
  wp.t_end = 1.0;
  wp.coeff = [&](double) { return GridField{b, ArrayXd::Constant(b->num_grid(), c2)}; };
  auto traj = solve_wave(unit_mode(b, 1), zero_field(b), wp);

  // phase-accurate to second order
  const double omega = std::sqrt(c2 * lam);
  CHECK(traj.z.back().coef[1] == doctest::Approx(std::cos(omega)).epsilon(1e-4));

  // the quadratic invariant |zt|^2 + c^2 |A^{1/2} z|^2 drifts only at solver tolerance
  auto energy = [&](size_t i) {
    return inner_product(traj.zt[i], traj.zt[i]) + c2 * sobolev_sq(traj.z[i], 1.0);
  };
  const double e0 = energy(0);
  double drift = 0.0;
  for (size_t i = 0; i < traj.times.size(); i += 25)
    drift = std::max(drift, std::abs(energy(i) - e0) / e0);
  CHECK(drift <= 1e-8);
}

TEST_CASE("wave: order-2 convergence with manufactured forcing") {
  auto b = build_basis({{1.0}}, {4});
  const double lam = b->eigenvalues()[0];
  auto run = [&](double dt) {
    WaveProblem wp;
    wp.dt = dt;
    wp.t_end = 1.0;
    wp.coeff = [&](double) { return GridField{b, ArrayXd::Ones(b->num_grid())}; };
    // z(t) = sin(t) phi_1 solves z_tt - Laplace z = (lam - 1) sin(t) phi_1
    wp.forcing = [&](double t) { return unit_mode(b, 0, (lam - 1.0) * std::sin(t)); };
    auto traj = solve_wave(zero_field(b), unit_mode(b, 0), wp);
    return std::abs(traj.z.back().coef[0] - std::sin(1.0));
  };
  const double e1 = run(2e-3), e2 = run(1e-3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("wave: coercivity violations are reported") {
  auto b = build_basis({{1.0}}, {4});
  WaveProblem wp;
  wp.dt = 1e-2;
  wp.t_end = 0.5;
  wp.coeff = [&](double) { return GridField{b, ArrayXd::Constant(b->num_grid(), -1.0)}; };
  CHECK_THROWS_AS(solve_wave(unit_mode(b, 0), zero_field(b), wp), CoercivityError);

  // loses positivity mid-run
  wp.coeff = [&](double t) { return GridField{b, ArrayXd::Constant(b->num_grid(), 1.0 - 4.0 * t)}; };
  CHECK_THROWS_AS(solve_wave(unit_mode(b, 0), zero_field(b), wp), CoercivityError);
}

TEST_CASE("rho metric closed form") {
  auto b = build_basis({{1.0}}, {5});
  const double lam = b->eigenvalues()[0];
  PlateState sa{unit_mode(b, 0, 1.0), zero_field(b), zero_field(b)};
  PlateState sb{unit_mode(b, 0, 1.0 + 0.25), zero_field(b), zero_field(b)};
  StateTrajectory ta{{0.0, 1.0}, {sa, sa}};
  StateTrajectory tb{{0.0, 1.0}, {sb, sa}};
  CHECK(rho_metric(ta, tb) == doctest::Approx(0.25 * std::sqrt(1.0 + lam)).epsilon(1e-13));
  StateTrajectory bad{{0.0}, {sa}};
  CHECK_THROWS_AS(rho_metric(ta, bad), std::invalid_argument);
}

TEST_CASE("fixed point reproduces the linear flow on one mode") {
  auto b = build_basis({{1.0}}, {4});
  ModelParams p;
  p.omega = 0.0;
  const double lam = b->eigenvalues()[0];

  PlateState init{unit_mode(b, 0, 0.5), zero_field(b), unit_mode(b, 0, -0.2)};
  KatoConfig cfg;
  cfg.window = 0.05;
  cfg.dt = 5e-4;
  cfg.t_end = 0.1;
  cfg.tol_rho = 1e-11;
  cfg.max_iter = 200;
  auto res = kato_fixed_point(init, p, cfg);
  CHECK(res.windows == 2);
  CHECK(res.traj.times.size() == 201);

  // dense-exponential oracle for the per-mode block
  const double B = lam / (1.0 + p.gamma * lam);
  Eigen::Matrix3d M;
  M << 0, 1, 0, -B * lam, 0, p.alpha * B * lam, 0, -p.alpha / p.beta,
      -(p.eta * lam + p.sigma) / p.beta;
  Eigen::Vector3d u0(0.5, 0.0, -0.2);
  for (size_t i : {50u, 100u, 200u}) {
    Eigen::Vector3d ref = (M * res.traj.times[i]).exp() * u0;
    CHECK(res.traj.states[i].z.coef[0] == doctest::Approx(ref[0]).epsilon(2e-5));
    CHECK(res.traj.states[i].zt.coef[0] == doctest::Approx(ref[1]).epsilon(2e-5));
    CHECK(res.traj.states[i].theta.coef[0] == doctest::Approx(ref[2]).epsilon(2e-5));
  }

  // contraction history: every ratio below one until the tolerance is hit
  REQUIRE(res.rho_history.size() == 2);
  for (const auto& hist : res.rho_history) {
    REQUIRE(hist.size() >= 3);
    for (size_t i = 1; i + 1 < hist.size(); ++i) CHECK(hist[i] < hist[i - 1]);
  }
}

TEST_CASE("fixed point contracts on small cubic data") {
  auto b = build_basis({{1.0}}, {8});
  ModelParams p;  // cubic, omega = 1
  SpectralField z0 = zero_field(b);
  z0.coef[0] = 1e-2;
  z0.coef[1] = 5e-3;
  PlateState init{z0, zero_field(b), zero_field(b)};
  KatoConfig cfg;
  cfg.window = 0.05;
  cfg.dt = 1e-3;
  cfg.t_end = 0.05;
  cfg.tol_rho = 1e-12;
  cfg.max_iter = 100;
  auto res = kato_fixed_point(init, p, cfg);
  REQUIRE(res.rho_history.size() == 1);
  const auto& hist = res.rho_history[0];
  REQUIRE(hist.size() >= 3);
  for (size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] < hist[i - 1]);
}

TEST_CASE("config validation") {
  auto b = build_basis({{1.0}}, {3});
  PlateState init{unit_mode(b, 0), zero_field(b), zero_field(b)};
  ModelParams p;
  KatoConfig cfg;
  cfg.damping = 0.0;
  CHECK_THROWS_AS(kato_fixed_point(init, p, cfg), std::invalid_argument);
  HeatProblem hp;
  hp.dt = 0.3;
  hp.t_end = 1.0;  // not divisible
  CHECK_THROWS_AS(solve_heat(unit_mode(b, 0), hp), std::invalid_argument);
}

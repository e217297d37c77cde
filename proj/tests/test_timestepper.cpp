#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "platesim/timestepper.hpp"

using namespace platesim;

namespace {

PlateState line_state(const BasisPtr& basis, const std::vector<double>& z,
                      const std::vector<double>& zt, const std::vector<double>& th) {
  PlateState s{zero_field(basis), zero_field(basis), zero_field(basis)};
  for (size_t k = 0; k < z.size(); ++k) s.z.coef[k] = z[k];
  for (size_t k = 0; k < zt.size(); ++k) s.zt.coef[k] = zt[k];
  for (size_t k = 0; k < th.size(); ++k) s.theta.coef[k] = th[k];
  return s;
}

double state_sup_diff(const PlateState& a, const PlateState& b) {
  return std::max({(a.z.coef - b.z.coef).abs().maxCoeff(),
                   (a.zt.coef - b.zt.coef).abs().maxCoeff(),
                   (a.theta.coef - b.theta.coef).abs().maxCoeff()});
}

ModelParams cubic_params(double omega) {
  ModelParams p;
  p.omega = omega;
  p.law = StiffnessLaw::cubic();
  return p;
}

}  // namespace

TEST_CASE("linear block entries and its mode-one spectrum") {
  ModelParams p;  // unit parameters
  const double lam = M_PI * M_PI;
  const Eigen::Matrix3d m = linear_block(lam, p);
  const double bl = lam * lam / (1.0 + lam);

  CHECK(m(0, 0) == 0.0);
  CHECK(m(0, 1) == 1.0);
  CHECK(m(0, 2) == 0.0);
  CHECK(m(1, 0) == doctest::Approx(-bl).epsilon(1e-15));
  CHECK(m(1, 1) == 0.0);
  CHECK(m(1, 2) == doctest::Approx(bl).epsilon(1e-15));
  CHECK(m(2, 0) == 0.0);
  CHECK(m(2, 1) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(m(2, 2) == doctest::Approx(-(lam + 1.0)).epsilon(1e-15));

  Eigen::EigenSolver<Eigen::Matrix3d> es(m);
  std::vector<std::pair<double, double>> eig;
  for (int i = 0; i < 3; ++i)
    eig.emplace_back(es.eigenvalues()[i].real(), std::abs(es.eigenvalues()[i].imag()));
  std::sort(eig.begin(), eig.end());
  CHECK(eig[0].first == doctest::Approx(-10.05061429).epsilon(1e-6));
  CHECK(eig[0].second == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(eig[1].first == doctest::Approx(-0.40949505).epsilon(1e-6));
  CHECK(eig[1].second == doctest::Approx(3.08612512).epsilon(1e-6));
  CHECK(eig[2].first == doctest::Approx(eig[1].first).epsilon(1e-12));
}

TEST_CASE("exponential schemes reproduce the matrix exponential on the linear problem") {
  auto basis = build_basis({{1.0}}, {8});
  std::vector<double> z(8), zt(8), th(8);
  for (int k = 0; k < 8; ++k) {
    z[k] = 1.0 / ((k + 1) * (k + 1));
    zt[k] = 0.3 / (k + 1);
    th[k] = 0.1 * (k % 2 ? -1.0 : 1.0) / (k + 1);
  }
  const PlateState init = line_state(basis, z, zt, th);
  const ModelParams p = cubic_params(0.0);  // the cubic terms are switched off

  SchemeSpec spec;
  spec.dt = 1e-3;
  RunControl ctl;
  ctl.t_end = 1.0;

  for (SchemeKind kind : {SchemeKind::etd2, SchemeKind::imex}) {
    spec.kind = kind;
    const Trajectory traj = run(init, p, spec, ctl);
    REQUIRE(traj.halt_reason == HaltReason::completed);
    REQUIRE(traj.times.size() == 1001);
    CHECK(traj.times.back() == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::ArrayXd& lam = basis->eigenvalues();
    for (int k = 0; k < 8; ++k) {
      const Eigen::Matrix3d prop = (linear_block(lam[k], p) * 1.0).exp();
      const Eigen::Vector3d ref = prop * Eigen::Vector3d(z[k], zt[k], th[k]);
      CHECK(std::abs(traj.states.back().z.coef[k] - ref[0]) <= 1e-12);
      CHECK(std::abs(traj.states.back().zt.coef[k] - ref[1]) <= 1e-12);
      CHECK(std::abs(traj.states.back().theta.coef[k] - ref[2]) <= 1e-12);
    }
  }
}

TEST_CASE("etd2 and imex converge at second order on the cubic problem") {
  auto basis = build_basis({{1.0}}, {8});
  const PlateState init =
      line_state(basis, {0.3, 0.1, 0.05}, {0.0, 0.2, 0.0}, {0.1, 0.0, 0.0});
  const ModelParams p = cubic_params(1.0);

  RunControl ctl;
  ctl.t_end = 0.5;
  ctl.sample_every = 1000000;  // final sample only

  SchemeSpec fine;
  fine.kind = SchemeKind::etd2;
  fine.dt = 1.0 / 8000.0;
  const PlateState ref = run(init, p, fine, ctl).states.back();

  for (SchemeKind kind : {SchemeKind::etd2, SchemeKind::imex}) {
    std::vector<double> err;
    for (double dt : {1.0 / 250.0, 1.0 / 500.0, 1.0 / 1000.0}) {
      SchemeSpec spec;
      spec.kind = kind;
      spec.dt = dt;
      const Trajectory traj = run(init, p, spec, ctl);
      REQUIRE(traj.halt_reason == HaltReason::completed);
      err.push_back(state_sup_diff(traj.states.back(), ref));
    }
    for (size_t i = 0; i + 1 < err.size(); ++i) {
      const double ratio = err[i] / err[i + 1];
      CHECK(ratio >= 3.2);
      CHECK(ratio <= 4.8);
    }
  }
}

TEST_CASE("rk4 converges at fourth order") {
  auto basis = build_basis({{1.0}}, {4});
  const PlateState init = line_state(basis, {0.3, 0.1}, {0.0, 0.2}, {0.1, 0.0});
  const ModelParams p = cubic_params(1.0);

  RunControl ctl;
  ctl.t_end = 0.5;
  ctl.sample_every = 1000000;

  SchemeSpec fine;
  fine.kind = SchemeKind::rk4;
  fine.dt = 1.0 / 1600.0;
  const PlateState ref = run(init, p, fine, ctl).states.back();

  std::vector<double> err;
  for (double dt : {1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0}) {
    SchemeSpec spec;
    spec.kind = SchemeKind::rk4;
    spec.dt = dt;
    err.push_back(state_sup_diff(run(init, p, spec, ctl).states.back(), ref));
  }
  for (size_t i = 0; i + 1 < err.size(); ++i) {
    const double ratio = err[i] / err[i + 1];
    CHECK(ratio >= 11.0);
    CHECK(ratio <= 22.0);
  }
}

TEST_CASE("the four schemes agree on a small cubic run") {
  auto basis = build_basis({{1.0}}, {6});
  const PlateState init = line_state(basis, {0.1, 0.05}, {0.0, 0.05}, {0.02});
  const ModelParams p = cubic_params(1.0);

  RunControl ctl;
  ctl.t_end = 0.2;
  ctl.sample_every = 1000000;

  SchemeSpec spec;
  spec.dt = 1e-3;

  spec.kind = SchemeKind::etd2;
  const Trajectory base = run(init, p, spec, ctl);
  REQUIRE(base.halt_reason == HaltReason::completed);

  spec.kind = SchemeKind::imex;
  CHECK(state_sup_diff(run(init, p, spec, ctl).states.back(), base.states.back()) <= 1e-6);
  spec.kind = SchemeKind::rk4;
  CHECK(state_sup_diff(run(init, p, spec, ctl).states.back(), base.states.back()) <= 1e-6);

  spec.kind = SchemeKind::kato;
  spec.kato.window = 0.05;
  const Trajectory viakato = run(init, p, spec, ctl);
  REQUIRE(viakato.halt_reason == HaltReason::completed);
  const double xk = viakato.diagnostics.back().x;
  const double xb = base.diagnostics.back().x;
  CHECK(std::abs(xk - xb) <= 1e-4 * xb);
}

TEST_CASE("cumulative diagnostics match the free-standing residual") {
  auto basis = build_basis({{1.0}}, {6});
  const PlateState init = line_state(basis, {0.2, 0.1}, {0.0, 0.1}, {0.05});
  const ModelParams p = cubic_params(1.0);

  SchemeSpec spec;
  spec.dt = 1e-3;
  RunControl ctl;
  ctl.t_end = 0.5;

  const Trajectory traj = run(init, p, spec, ctl);
  REQUIRE(traj.halt_reason == HaltReason::completed);
  const double direct = identity_residual(traj.times, traj.states, p);
  CHECK(std::abs(traj.diagnostics.back().identity_residual - direct) <= 1e-12);
  CHECK(traj.diagnostics.back().identity_residual <= 1e-4);  // order dt^2 defect
  CHECK(traj.diagnostics.back().cum_dissipation > 0.0);

  // thinned sampling keeps step 0, every fifth step, and the last step
  RunControl thin = ctl;
  thin.sample_every = 5;
  thin.keep_states = false;
  const Trajectory sparse = run(init, p, spec, thin);
  CHECK(sparse.states.empty());
  CHECK(sparse.times.size() == 101);
  CHECK(sparse.diagnostics.size() == 101);
  CHECK(sparse.times[1] == doctest::Approx(5e-3).epsilon(1e-12));
}

TEST_CASE("a tabulated law that loses positivity halts the run") {
  auto basis = build_basis({{1.0}}, {4});
  // a(zeta) = 1 - zeta on [-10, 10]; the state starts at min a = 0.1 with a
  // strong upward velocity, so positivity fails within a few steps
  ModelParams p;
  p.omega = 0.0;
  p.law = StiffnessLaw::tabulated({-10.0, 10.0}, {11.0, -9.0});

  const double c = 0.9 / std::sqrt(2.0);
  const PlateState init = line_state(basis, {c}, {3.0}, {0.0});

  SchemeSpec spec;
  spec.kind = SchemeKind::rk4;
  spec.dt = 1e-3;
  RunControl ctl;
  ctl.t_end = 1.0;

  const Trajectory traj = run(init, p, spec, ctl);
  CHECK(traj.halt_reason == HaltReason::hyperbolicity_loss);
  CHECK(traj.times.back() < 1.0);
  // every recorded sample still satisfies the floor
  for (const EnergyReport& rep : traj.diagnostics) CHECK(rep.min_a > 0.0);
}

TEST_CASE("an unstable step size halts with a blowup") {
  auto basis = build_basis({{1.0}}, {8});
  std::vector<double> z(8, 0.0);
  z[7] = 1e-2;  // mode with the stiffest thermal decay
  const PlateState init = line_state(basis, z, {}, {});
  const ModelParams p = cubic_params(0.0);

  SchemeSpec spec;
  spec.kind = SchemeKind::rk4;
  spec.dt = 0.02;  // far outside the stability interval of the stiff mode
  RunControl ctl;
  ctl.t_end = 1.0;

  const Trajectory traj = run(init, p, spec, ctl);
  CHECK(traj.halt_reason == HaltReason::blowup);
  CHECK(traj.times.back() < 1.0);
}

TEST_CASE("a starved fixed-point budget is reported as a solver failure") {
  auto basis = build_basis({{1.0}}, {4});
  const PlateState init = line_state(basis, {0.1}, {0.05}, {0.02});
  const ModelParams p = cubic_params(1.0);

  SchemeSpec spec;
  spec.kind = SchemeKind::kato;
  spec.dt = 1e-3;
  spec.kato.max_iter = 1;
  spec.kato.tol_rho = 1e-16;
  spec.kato.max_window_halvings = 0;
  RunControl ctl;
  ctl.t_end = 0.1;

  const Trajectory traj = run(init, p, spec, ctl);
  CHECK(traj.halt_reason == HaltReason::solver_failure);
  CHECK(traj.times.size() == 1);  // only the initial sample survives
}

TEST_CASE("configuration rejections") {
  auto basis = build_basis({{1.0}}, {4});
  const PlateState init = line_state(basis, {0.1}, {}, {});

  ModelParams tab;
  tab.law = StiffnessLaw::tabulated({-1.0, 1.0}, {2.0, 2.0});
  SchemeSpec spec;
  RunControl ctl;
  CHECK_THROWS_AS(run(init, tab, spec, ctl), std::invalid_argument);
  spec.kind = SchemeKind::imex;
  ModelParams con;
  con.law = StiffnessLaw::constant(1.0);
  CHECK_THROWS_AS(run(init, con, spec, ctl), std::invalid_argument);

  const ModelParams p = cubic_params(1.0);
  spec.kind = SchemeKind::etd2;
  spec.dt = 0.3;  // does not divide the horizon
  CHECK_THROWS_AS(run(init, p, spec, ctl), std::invalid_argument);

  spec.dt = 1e-3;
  RunControl bad = ctl;
  bad.sample_every = 0;
  CHECK_THROWS_AS(run(init, p, spec, bad), std::invalid_argument);
  bad = ctl;
  bad.blowup_factor = 1.0;
  CHECK_THROWS_AS(run(init, p, spec, bad), std::invalid_argument);
  bad = ctl;
  bad.t_end = -1.0;
  CHECK_THROWS_AS(run(init, p, spec, bad), std::invalid_argument);
}

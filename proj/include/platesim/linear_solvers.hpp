#pragma once

#include <functional>

#include "platesim/model.hpp"

namespace platesim {

struct SolverError : std::runtime_error {
  double residual;
  explicit SolverError(const std::string& what, double res = 0.0)
      : std::runtime_error(what), residual(res) {}
};

struct CoercivityError : std::runtime_error {
  double min_coeff;
  explicit CoercivityError(double m)
      : std::runtime_error("wave coefficient below coercivity floor (min = " +
                           std::to_string(m) + ")"),
        min_coeff(m) {}
};

struct NonContractionError : std::runtime_error {
  std::vector<double> rho_history;
  explicit NonContractionError(std::vector<double> hist)
      : std::runtime_error("fixed-point iteration stopped contracting"),
        rho_history(std::move(hist)) {}
};

// theta_t - diffusivity * Laplace(theta) = source, Dirichlet walls.
// Stepped per mode by the exact homogeneous exponential with the
// phi1/phi2-weighted trapezoidal quadrature of the source (order 2, exact
// for sources constant in time).
struct HeatProblem {
  double diffusivity = 1.0;
  double dt = 1e-3;
  double t_end = 1.0;
  std::function<SpectralField(double)> source;  // empty means zero
};

struct HeatTrajectory {
  std::vector<double> times;
  std::vector<SpectralField> theta;
};

HeatTrajectory solve_heat(const SpectralField& theta0, const HeatProblem& prob);

// z_tt - coeff(t,x) * Laplace(z) = forcing, Dirichlet walls, implicit
// midpoint with the coefficient frozen at the step midpoint. The midpoint
// system is solved in the divided form (1/coeff + (dt^2/4) A) z = ..., which
// is symmetric positive definite, by conjugate gradients with the
// constant-coefficient diagonal preconditioner.
struct WaveProblem {
  double dt = 1e-3;
  double t_end = 1.0;
  std::function<GridField(double)> coeff;
  std::function<SpectralField(double)> forcing;  // empty means zero
  double coercivity_floor = 1e-10;
  double solver_tol = 1e-12;
  int max_cg_iter = 2000;
};

struct WaveTrajectory {
  std::vector<double> times;
  std::vector<SpectralField> z;
  std::vector<SpectralField> zt;
};

WaveTrajectory solve_wave(const SpectralField& z0, const SpectralField& zt0,
                          const WaveProblem& prob);

struct StateTrajectory {
  std::vector<double> times;
  std::vector<PlateState> states;
};

// Sampled contraction metric: max over shared sample times of
//   (|dz|^2 + |dzt|^2 + |A^{1/2} dz|^2 + |dtheta|^2 + |A^{1/2} dtheta|^2)^{1/2}.
double rho_metric(const StateTrajectory& a, const StateTrajectory& b);

struct KatoConfig {
  double window = 0.1;  // contraction window, halved on non-contraction
  double dt = 1e-3;
  double t_end = 0.1;
  double tol_rho = 1e-10;
  int max_iter = 60;
  double damping = 1.0;              // iterate relaxation in (0, 1]
  double theta_coupling_sign = 1.0;  // sign of the (alpha/gamma)(1-K)A theta forcing term
  double solver_tol = 1e-12;
  int max_window_halvings = 6;
};

struct KatoResult {
  StateTrajectory traj;
  std::vector<std::vector<double>> rho_history;  // one list per chained window
  int windows = 0;
  int total_iterations = 0;
};

// Fixed-point construction: per window, freeze the previous iterate, solve
// the heat equation for a fresh temperature, assemble the frozen wave
// coefficient and forcing from the iterate and that temperature, solve the
// wave equation, and measure rho against the previous iterate. Windows are
// chained until t_end; a window that stops contracting is halved.
KatoResult kato_fixed_point(const PlateState& init, const ModelParams& p,
                            const KatoConfig& cfg);

}  // namespace platesim

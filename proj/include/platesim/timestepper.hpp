#pragma once

#include <Eigen/Dense>

#include "platesim/energy.hpp"
#include "platesim/linear_solvers.hpp"

namespace platesim {

// Per-mode block of the resolved system linearized at zero (unit principal
// coefficient), in the (z, zt, theta) coordinates at eigenvalue lambda:
//   d/dt (z, zt, theta) = M(lambda) (z, zt, theta) + (0, B(lambda) Fhat, 0).
Eigen::Matrix3d linear_block(double lambda, const ModelParams& p);

// etd2: exponential two-stage predictor/corrector (one-step, order 2);
// imex:  exponential two-step scheme with extrapolated forcing, bootstrapped
//        by a single etd2 step (order 2, one nonlinear evaluation per step);
// rk4:   classical four-stage Runge-Kutta on the resolved right-hand side;
// kato:  the fixed-point construction from linear_solvers, windows chained
//        to the full horizon.
// The exponential schemes propagate the linear part exactly through the
// per-mode matrix exponential, so they accept only the cubic law.
enum class SchemeKind { etd2, imex, rk4, kato };

struct SchemeSpec {
  SchemeKind kind = SchemeKind::etd2;
  double dt = 1e-3;
  KatoConfig kato;  // consulted by the kato scheme only; its dt and t_end
                    // are overwritten from the fields above and the run control
};

struct RunControl {
  double t_end = 1.0;
  int sample_every = 1;        // record every k-th step (step 0 and the last
                               // step are always recorded)
  double blowup_factor = 1e6;  // halt when X exceeds this multiple of X(0)
  double hyperbolicity_floor = 0.0;  // halt when min a(z) falls to this level
  bool keep_states = true;     // false records diagnostics only
};

enum class HaltReason { completed, blowup, hyperbolicity_loss, solver_failure };

const char* to_string(HaltReason r);

// Sampled run. A halted run keeps every sample accepted before the halt; a
// state that tripped a monitor (non-finite, stiffness floor) is discarded,
// so the recorded trajectory always satisfies the monitors. The cumulative
// diagnostic columns are trapezoid sums over the recorded samples.
struct Trajectory {
  std::vector<double> times;
  std::vector<PlateState> states;  // empty when keep_states is off
  std::vector<EnergyReport> diagnostics;
  HaltReason halt_reason = HaltReason::completed;
  // filled by the kato scheme only
  std::vector<std::vector<double>> kato_rho;  // contraction history per window
  int kato_windows = 0;
  int kato_iterations = 0;
};

Trajectory run(const PlateState& init, const ModelParams& p, const SchemeSpec& scheme,
               const RunControl& control);

}  // namespace platesim

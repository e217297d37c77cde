#pragma once

#include "platesim/model.hpp"

namespace platesim {

// Instantaneous energy levels. The first level is reported twice: e1 carries
// the unit thermal weight of the level definitions, e1_beta carries the
// (beta/2) weight under which the dissipation identity is exact.
struct EnergyReport {
  double t = 0.0;
  double e1 = 0.0;
  double e1_beta = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
  double x = 0.0;  // e2 + e3
  double min_a = 0.0;
  double boost_ratio = 0.0;
  double cum_dissipation = 0.0;  // int eta |A theta|^2 + sigma |A^{1/2} theta|^2
  double cum_work = 0.0;         // int <F, zt>
  double identity_residual = 0.0;
};

EnergyReport energy_levels(const PlateState& s, const ModelParams& p);

// |A^{3/2} z|^2 / (X + X^3); zero for the zero state.
double boost_ratio(const PlateState& s, const ModelParams& p);

// |[E1b(T) - E1b(0)] + int(dissipation) - int(<F, zt>)| with trapezoid
// quadrature over the sampled trajectory.
double identity_residual(const std::vector<double>& times,
                         const std::vector<PlateState>& states, const ModelParams& p);

struct DecayFitOptions {
  double skip_head = 0.05;  // fraction of the horizon dropped at the front
  double skip_tail = 0.05;
  double floor_rel = 1e-14;  // samples are floored at floor_rel * X(0)
};

struct DecayFit {
  double k = 0.0;   // fitted rate of X(t) <= C exp(-k t) X(0)
  double C = 0.0;   // inflated so the bound holds at every window sample
  double r2 = 0.0;  // of the least-squares line through (t, ln X)
  double t_lo = 0.0, t_hi = 0.0;
};

DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& x,
                   const DecayFitOptions& opt = {});

struct BarrierConstants {
  double C1 = 1.0, C2 = 1.0, C3 = 1.0, C4 = 1.0;
};

// k(x) = x - C4 (x^2 + x^4 + x^6 + x^8)
double barrier_k(double x, const BarrierConstants& c);
// h(x) = C1 x - C3 (x^{3/2} + x^2 + x^3 + x^4 + x^{9/2} + x^6 + x^9)
double barrier_h(double x, const BarrierConstants& c);

struct BarrierReport {
  double eta_root = 0.0;  // unique positive root of k
  double xi_root = 0.0;   // unique positive root of h
  bool eta_unbounded = false;
  bool xi_unbounded = false;
  double k_argmax = 0.0;
  double k_max = 0.0;
  double delta1 = 0.0;  // band edges where k(y) = C2 * X(0)
  double delta2 = 0.0;
  bool bands_defined = false;  // C2 X(0) below the peak of k
  bool admissible = false;     // X(0) below both delta1 and xi
  double x0 = 0.0;
};

BarrierReport barrier_roots(const BarrierConstants& c, double x0);

struct BarrierMargins {
  std::vector<double> margin;  // C2 X(0) - k(X(t)) - int_0^t h(X)
  double worst = 0.0;
  bool holds = false;
};

BarrierMargins barrier_eval(const std::vector<double>& times, const std::vector<double>& x,
                            const BarrierConstants& c);

struct AprioriFit {
  BarrierConstants c;
  double slack = 0.0;  // min over samples of (rhs - lhs); +inf for the zero trajectory
};

// Deterministic monotone fit of the integral inequality
//   X(T) + C1 int X <= C2 X(0) + C3 int (X^{3/2}+X^2+X^3+X^4+X^6)
//                    + C4 (X^2+X^4+X^6+X^8)(T):
// C1 is the fitted decay rate; the remaining constants start at zero and the
// one with the largest coefficient is raised by exactly the deficit whenever
// a sample violates the inequality.
AprioriFit apriori_constants(const std::vector<double>& times, const std::vector<double>& x);

}  // namespace platesim

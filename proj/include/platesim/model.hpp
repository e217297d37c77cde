#pragma once

#include "platesim/spectral.hpp"

namespace platesim {

// Pointwise stiffness coefficient a(zeta):
//   constant:  a == value
//   cubic:     a = 1 + 3*omega*zeta^2 (the effective coefficient of the
//              omega-model once the cubic term joins the principal part)
//   tabulated: piecewise-linear through (zeta, a) nodes, clamped ends
struct StiffnessLaw {
  enum class Kind { constant, cubic, tabulated };
  Kind kind = Kind::cubic;
  double value = 1.0;           // constant law only
  std::vector<double> zeta;     // tabulated nodes, strictly increasing
  std::vector<double> a_nodes;  // tabulated values

  static StiffnessLaw constant(double v);
  static StiffnessLaw cubic();
  static StiffnessLaw tabulated(std::vector<double> zeta, std::vector<double> a);

  double operator()(double z, double omega) const;
  // slope da/dzeta (a.e. for the tabulated law; clamped regions give 0)
  double derivative(double z, double omega) const;
};

struct ModelParams {
  double alpha = 1.0;  // thermal coupling
  double beta = 1.0;   // thermal capacity
  double gamma = 1.0;  // rotational inertia
  double eta = 1.0;    // conductivity
  double sigma = 1.0;  // lower-order thermal dissipation
  double omega = 1.0;  // cubic forcing strength; 0 switches the cubic terms off
  StiffnessLaw law;

  void validate() const;
};

// State of the order-reduced system: z = A w, its velocity, and temperature,
// all coefficients against one shared basis.
struct PlateState {
  SpectralField z;
  SpectralField zt;
  SpectralField theta;

  const BasisPtr& basis() const { return z.basis; }
};

void check_state(const PlateState& s);

struct Rhs {
  SpectralField ztt;
  SpectralField thetat;
};

struct CompatibilityJet {
  int order = 1;
  std::vector<SpectralField> z_derivs;      // z^(0) .. z^(order)
  std::vector<SpectralField> theta_derivs;  // theta^(0) .. theta^(order-1)
};

struct HyperbolicityError : std::runtime_error {
  double min_a;
  explicit HyperbolicityError(double m)
      : std::runtime_error("stiffness coefficient lost positivity (min a = " +
                           std::to_string(m) + ")"),
        min_a(m) {}
};

// Map deflection-form data (w0, w1, theta0) to the order-reduced state
// (z, zt, theta) = (A w0, A w1, theta0).
PlateState reduce_order(const SpectralField& w0, const SpectralField& w1,
                        const SpectralField& theta0);

// Pointwise cubic forcing omega * (-3 z^2 Az + 6 z |grad z|^2), dealiased.
SpectralField nonlinearity_F(const SpectralField& z, double omega);

// Coefficient-space route sign * omega * A(z^3); the pointwise form above
// equals the sign = -1 branch.
SpectralField nonlinearity_F_spectral(const SpectralField& z, double omega, double sign);

// Time derivative of the cubic forcing along (z, zt).
SpectralField nonlinearity_G(const SpectralField& z, const SpectralField& zt, double omega);

// Resolved right-hand side of the order-reduced system:
//   ztt    = B(-a(z) Az + f(z, grad z) + alpha A theta)
//   thetat = -(1/beta) (eta A theta + sigma theta + alpha zt)
// For the cubic law, f = 6 omega z |grad z|^2; other laws carry no forcing.
Rhs rhs(const PlateState& s, const ModelParams& p);

// Minimum of a(z(x)) over the collocation grid.
double hyperbolicity_min(const SpectralField& z, const StiffnessLaw& law, double omega);

// Jets of the solution at t = 0 from deflection-form data, obtained by
// evaluating the resolved system and differentiating it once in time.
// order in {1,2,3}: order 2 adds (z^(2), theta^(1)), order 3 adds
// (z^(3), theta^(2)).
CompatibilityJet compatibility_data(const SpectralField& w0, const SpectralField& w1,
                                    const SpectralField& theta0, const ModelParams& p,
                                    int order);

}  // namespace platesim

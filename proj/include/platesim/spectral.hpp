#pragma once

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <stdexcept>
#include <vector>

namespace platesim {

using Eigen::ArrayXd;
using Eigen::Index;

// Rectangular box (0,L_1) x ... x (0,L_d), homogeneous Dirichlet walls.
struct BoxDomain {
  std::vector<double> lengths;  // one entry per axis, all > 0

  int dim() const { return static_cast<int>(lengths.size()); }
};

// Sine eigenbasis of the Dirichlet Laplacian on a BoxDomain, together with
// the collocation grid used for pointwise (dealiased) products.
//
// Mode multi-indices (m_1,...,m_d), 1 <= m_i <= modes_per_axis[i], are
// flattened lexicographically with the last axis fastest; the grid uses the
// interior nodes x_j = j*L/(N+1), j = 1..N, with N = dealias_factor * M per
// axis, flattened the same way.
class Basis {
 public:
  Basis(BoxDomain domain, std::vector<int> modes_per_axis, int dealias_factor);

  const BoxDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  const std::vector<int>& modes_per_axis() const { return modes_; }
  int dealias_factor() const { return dealias_; }
  Index num_modes() const { return num_modes_; }
  Index num_grid() const { return num_grid_; }

  // Dirichlet eigenvalues sum_i (m_i pi / L_i)^2, in flattened mode order.
  const ArrayXd& eigenvalues() const { return eigenvalues_; }

  // Product of the per-axis spacings L_i/(N_i+1); the weight of the exact
  // interior quadrature on the collocation grid.
  double quadrature_weight() const { return quad_weight_; }

  bool same_layout(const Basis& other) const;

  // Internal transform plans (exposed for the free functions below).
  const Eigen::MatrixXd& synth(int axis) const { return synth_[axis]; }
  const Eigen::MatrixXd& analyze(int axis) const { return analyze_[axis]; }
  const Eigen::MatrixXd& synth_deriv(int axis) const { return synth_deriv_[axis]; }

 private:
  BoxDomain domain_;
  std::vector<int> modes_;
  int dealias_;
  Index num_modes_ = 0;
  Index num_grid_ = 0;
  ArrayXd eigenvalues_;
  double quad_weight_ = 0.0;
  std::vector<Eigen::MatrixXd> synth_;        // N_i x M_i sine synthesis
  std::vector<Eigen::MatrixXd> analyze_;      // M_i x N_i scaled transpose
  std::vector<Eigen::MatrixXd> synth_deriv_;  // N_i x M_i cosine-derivative synthesis
};

using BasisPtr = std::shared_ptr<const Basis>;

BasisPtr build_basis(const BoxDomain& domain, const std::vector<int>& modes_per_axis,
                     int dealias_factor = 2);

// Field given by coefficients against the L2-orthonormal eigenbasis.
struct SpectralField {
  BasisPtr basis;
  ArrayXd coef;  // size basis->num_modes()
};

// Field given by values at the interior collocation nodes.
struct GridField {
  BasisPtr basis;
  ArrayXd val;  // size basis->num_grid()
};

SpectralField zero_field(const BasisPtr& basis);

GridField to_grid(const SpectralField& f);
SpectralField to_spectral(const GridField& g);

// Coefficient-wise lambda^p; p < 0 is the compact inverse branch.
SpectralField apply_power_of_A(const SpectralField& f, double p);

// K = A^{-1} (A^{-1} + gamma I)^{-1}: coefficient-wise 1/(1 + gamma*lambda).
SpectralField apply_K(const SpectralField& f, double gamma);

// B = (A^{-1} + gamma I)^{-1}: coefficient-wise lambda/(1 + gamma*lambda).
SpectralField apply_B(const SpectralField& f, double gamma);

// Gradient components on the collocation grid, one per axis.
std::vector<GridField> gradient(const SpectralField& f);

// L2 inner product = coefficient dot product (Parseval).
double inner_product(const SpectralField& f, const SpectralField& g);

// sum_k lambda^s f_k^2, i.e. the squared A^{s/2} seminorm.
double sobolev_sq(const SpectralField& f, double s);

double grid_inner(const GridField& f, const GridField& g);

}  // namespace platesim

#include "platesim/model.hpp"

#include <algorithm>
#include <cmath>

namespace platesim {

StiffnessLaw StiffnessLaw::constant(double v) {
  StiffnessLaw l;
  l.kind = Kind::constant;
  l.value = v;
  return l;
}

StiffnessLaw StiffnessLaw::cubic() { return {}; }

StiffnessLaw StiffnessLaw::tabulated(std::vector<double> zeta, std::vector<double> a) {
  if (zeta.size() != a.size() || zeta.size() < 2)
    throw std::invalid_argument("tabulated stiffness needs >= 2 matching nodes");
  if (!std::is_sorted(zeta.begin(), zeta.end()))
    throw std::invalid_argument("tabulated stiffness nodes must be increasing");
  StiffnessLaw l;
  l.kind = Kind::tabulated;
  l.zeta = std::move(zeta);
  l.a_nodes = std::move(a);
  return l;
}

double StiffnessLaw::operator()(double z, double omega) const {
  switch (kind) {
    case Kind::constant:
      return value;
    case Kind::cubic:
      return 1.0 + 3.0 * omega * z * z;
    case Kind::tabulated: {
      if (z <= zeta.front()) return a_nodes.front();
      if (z >= zeta.back()) return a_nodes.back();
      const auto it = std::upper_bound(zeta.begin(), zeta.end(), z);
      const size_t i = static_cast<size_t>(it - zeta.begin());
      const double t = (z - zeta[i - 1]) / (zeta[i] - zeta[i - 1]);
      return a_nodes[i - 1] + t * (a_nodes[i] - a_nodes[i - 1]);
    }
  }
  return value;
}

double StiffnessLaw::derivative(double z, double omega) const {
  switch (kind) {
    case Kind::constant:
      return 0.0;
    case Kind::cubic:
      return 6.0 * omega * z;
    case Kind::tabulated: {
      if (z <= zeta.front() || z >= zeta.back()) return 0.0;
      const auto it = std::upper_bound(zeta.begin(), zeta.end(), z);
      const size_t i = static_cast<size_t>(it - zeta.begin());
      return (a_nodes[i] - a_nodes[i - 1]) / (zeta[i] - zeta[i - 1]);
    }
  }
  return 0.0;
}

void ModelParams::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  pos(alpha, "alpha");
  pos(beta, "beta");
  pos(gamma, "gamma");
  pos(eta, "eta");
  pos(sigma, "sigma");
  if (law.kind == StiffnessLaw::Kind::constant && !(law.value > 0.0))
    throw std::invalid_argument("constant stiffness must be positive");
}

void check_state(const PlateState& s) {
  if (!s.z.basis || !s.zt.basis || !s.theta.basis)
    throw std::invalid_argument("state field without basis");
  if (!s.z.basis->same_layout(*s.zt.basis) || !s.z.basis->same_layout(*s.theta.basis))
    throw std::invalid_argument("state fields must share one basis");
}

PlateState reduce_order(const SpectralField& w0, const SpectralField& w1,
                        const SpectralField& theta0) {
  PlateState s{apply_power_of_A(w0, 1.0), apply_power_of_A(w1, 1.0), theta0};
  check_state(s);
  return s;
}

namespace {

ArrayXd grad_sq(const std::vector<GridField>& g) {
  ArrayXd s = g[0].val.square();
  for (size_t i = 1; i < g.size(); ++i) s += g[i].val.square();
  return s;
}

ArrayXd grad_dot(const std::vector<GridField>& a, const std::vector<GridField>& b) {
  ArrayXd s = a[0].val * b[0].val;
  for (size_t i = 1; i < a.size(); ++i) s += a[i].val * b[i].val;
  return s;
}

ArrayXd law_on_grid(const StiffnessLaw& law, const ArrayXd& zg, double omega) {
  if (law.kind == StiffnessLaw::Kind::cubic) return 1.0 + 3.0 * omega * zg.square();
  if (law.kind == StiffnessLaw::Kind::constant)
    return ArrayXd::Constant(zg.size(), law.value);
  ArrayXd a(zg.size());
  for (Index j = 0; j < zg.size(); ++j) a[j] = law(zg[j], omega);
  return a;
}

}  // namespace

SpectralField nonlinearity_F(const SpectralField& z, double omega) {
  if (omega == 0.0) return zero_field(z.basis);
  const GridField zg = to_grid(z);
  const GridField azg = to_grid(apply_power_of_A(z, 1.0));
  const ArrayXd gsq = grad_sq(gradient(z));
  GridField f{z.basis, omega * (-3.0 * zg.val.square() * azg.val + 6.0 * zg.val * gsq)};
  return to_spectral(f);
}

SpectralField nonlinearity_F_spectral(const SpectralField& z, double omega, double sign) {
  if (omega == 0.0) return zero_field(z.basis);
  const GridField zg = to_grid(z);
  SpectralField cube = to_spectral({z.basis, zg.val.cube()});
  cube.coef *= sign * omega * z.basis->eigenvalues();
  return cube;
}

SpectralField nonlinearity_G(const SpectralField& z, const SpectralField& zt, double omega) {
  if (omega == 0.0) return zero_field(z.basis);
  const GridField zg = to_grid(z);
  const GridField ztg = to_grid(zt);
  const GridField azg = to_grid(apply_power_of_A(z, 1.0));
  const GridField aztg = to_grid(apply_power_of_A(zt, 1.0));
  const auto gz = gradient(z);
  const auto gzt = gradient(zt);
  GridField g{z.basis,
              omega * (-6.0 * zg.val * ztg.val * azg.val - 3.0 * zg.val.square() * aztg.val +
                       6.0 * ztg.val * grad_sq(gz) + 12.0 * zg.val * grad_dot(gz, gzt))};
  return to_spectral(g);
}

Rhs rhs(const PlateState& s, const ModelParams& p) {
  check_state(s);
  const ArrayXd& lam = s.basis()->eigenvalues();

  SpectralField wave_src = zero_field(s.basis());
  const bool pure_linear = p.law.kind == StiffnessLaw::Kind::cubic && p.omega == 0.0;
  if (pure_linear) {
    wave_src.coef = -lam * s.z.coef;
  } else {
    const GridField zg = to_grid(s.z);
    const ArrayXd a_vals = law_on_grid(p.law, zg.val, p.omega);
    const double amin = a_vals.minCoeff();
    if (!(amin > 0.0)) throw HyperbolicityError(amin);
    const GridField azg = to_grid(apply_power_of_A(s.z, 1.0));
    ArrayXd src = -a_vals * azg.val;
    if (p.law.kind == StiffnessLaw::Kind::cubic)
      src += 6.0 * p.omega * zg.val * grad_sq(gradient(s.z));
    wave_src = to_spectral({s.basis(), std::move(src)});
  }
  wave_src.coef += p.alpha * lam * s.theta.coef;

  Rhs r{apply_B(wave_src, p.gamma), zero_field(s.basis())};
  r.thetat.coef =
      -(p.eta * lam * s.theta.coef + p.sigma * s.theta.coef + p.alpha * s.zt.coef) / p.beta;
  return r;
}

double hyperbolicity_min(const SpectralField& z, const StiffnessLaw& law, double omega) {
  const GridField zg = to_grid(z);
  return law_on_grid(law, zg.val, omega).minCoeff();
}

CompatibilityJet compatibility_data(const SpectralField& w0, const SpectralField& w1,
                                    const SpectralField& theta0, const ModelParams& p,
                                    int order) {
  if (order < 1 || order > 3)
    throw std::invalid_argument("compatibility jet order must be 1, 2, or 3");
  PlateState s = reduce_order(w0, w1, theta0);
  const ArrayXd& lam = s.basis()->eigenvalues();

  CompatibilityJet jet;
  jet.order = order;
  jet.z_derivs = {s.z, s.zt};
  jet.theta_derivs = {s.theta};
  if (order < 2) return jet;

  const Rhs r1 = rhs(s, p);
  jet.z_derivs.push_back(r1.ztt);
  jet.theta_derivs.push_back(r1.thetat);
  if (order < 3) return jet;

  // differentiate the resolved system once:
  //   z^(3)     = B(-d/dt[a(z) Az] + d/dt f + alpha A theta^(1))
  //   theta^(2) = -(1/beta)(eta A theta^(1) + sigma theta^(1) + alpha z^(2))
  SpectralField wave_src = zero_field(s.basis());
  if (p.law.kind == StiffnessLaw::Kind::cubic && p.omega == 0.0) {
    wave_src.coef = -lam * s.zt.coef;
  } else {
    const GridField zg = to_grid(s.z);
    const GridField ztg = to_grid(s.zt);
    const GridField azg = to_grid(apply_power_of_A(s.z, 1.0));
    const GridField aztg = to_grid(apply_power_of_A(s.zt, 1.0));
    ArrayXd a_vals = law_on_grid(p.law, zg.val, p.omega);
    ArrayXd ap_vals(zg.val.size());
    for (Index j = 0; j < zg.val.size(); ++j) ap_vals[j] = p.law.derivative(zg.val[j], p.omega);
    ArrayXd src = -(ap_vals * ztg.val * azg.val + a_vals * aztg.val);
    if (p.law.kind == StiffnessLaw::Kind::cubic) {
      const auto gz = gradient(s.z);
      const auto gzt = gradient(s.zt);
      src += 6.0 * p.omega * ztg.val * grad_sq(gz) + 12.0 * p.omega * zg.val * grad_dot(gz, gzt);
    }
    wave_src = to_spectral({s.basis(), std::move(src)});
  }
  wave_src.coef += p.alpha * lam * r1.thetat.coef;
  jet.z_derivs.push_back(apply_B(wave_src, p.gamma));

  SpectralField theta2 = zero_field(s.basis());
  theta2.coef = -(p.eta * lam * r1.thetat.coef + p.sigma * r1.thetat.coef +
                  p.alpha * r1.ztt.coef) /
                p.beta;
  jet.theta_derivs.push_back(theta2);
  return jet;
}

}  // namespace platesim

#include "platesim/linear_solvers.hpp"

#include <cmath>

namespace platesim {

namespace {

long step_count(double t_end, double dt, const char* who) {
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw std::invalid_argument(std::string(who) + ": dt and t_end must be positive");
  const long n = std::lround(t_end / dt);
  if (n < 1 || std::abs(n * dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument(std::string(who) + ": dt must divide t_end");
  return n;
}

// phi1(x) = (e^x - 1)/x, phi2(x) = (e^x - 1 - x)/x^2, series near 0
double phi1(double x) {
  if (std::abs(x) < 1e-4)
    return 1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0;
  return std::expm1(x) / x;
}

double phi2(double x) {
  if (std::abs(x) < 1e-4)
    return 0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0;
  return (std::expm1(x) - x) / (x * x);
}

SpectralField eval_or_zero(const std::function<SpectralField(double)>& f, double t,
                           const BasisPtr& basis) {
  if (!f) return zero_field(basis);
  SpectralField v = f(t);
  if (!v.basis || !v.basis->same_layout(*basis))
    throw std::invalid_argument("time-dependent field on mismatched basis");
  return v;
}

}  // namespace

HeatTrajectory solve_heat(const SpectralField& theta0, const HeatProblem& prob) {
  if (!(prob.diffusivity > 0.0)) throw std::invalid_argument("diffusivity must be positive");
  const long n = step_count(prob.t_end, prob.dt, "solve_heat");
  const BasisPtr& basis = theta0.basis;
  const ArrayXd& lam = basis->eigenvalues();
  const double h = prob.dt;

  ArrayXd decay(lam.size()), w0(lam.size()), w1(lam.size());
  for (Index k = 0; k < lam.size(); ++k) {
    const double zeta = -prob.diffusivity * lam[k] * h;
    decay[k] = std::exp(zeta);
    const double p1 = phi1(zeta), p2 = phi2(zeta);
    w0[k] = h * (p1 - p2);
    w1[k] = h * p2;
  }

  HeatTrajectory traj;
  traj.times.reserve(n + 1);
  traj.theta.reserve(n + 1);
  traj.times.push_back(0.0);
  traj.theta.push_back(theta0);
  SpectralField cur = theta0;
  SpectralField g_lo = eval_or_zero(prob.source, 0.0, basis);
  for (long i = 0; i < n; ++i) {
    const double t1 = (i + 1) * h;
    SpectralField g_hi = eval_or_zero(prob.source, t1, basis);
    cur.coef = decay * cur.coef + w0 * g_lo.coef + w1 * g_hi.coef;
    traj.times.push_back(t1);
    traj.theta.push_back(cur);
    g_lo = std::move(g_hi);
  }
  return traj;
}

namespace {

// conjugate gradients for (W + c A) u = b, with W u = to_spectral(w .* to_grid(u))
struct MidpointSystem {
  BasisPtr basis;
  ArrayXd w;        // 1/coeff on the grid
  double c;         // dt^2/4
  ArrayXd precond;  // 1/(1/mean_coeff + c*lambda)

  ArrayXd apply(const ArrayXd& u) const {
    GridField g = to_grid({basis, u});
    g.val *= w;
    return to_spectral(g).coef + c * basis->eigenvalues() * u;
  }
};

ArrayXd solve_cg(const MidpointSystem& sys, const ArrayXd& b, ArrayXd u, double tol,
                 int max_iter) {
  const double norm_b = std::sqrt(b.square().sum());
  if (norm_b == 0.0) return ArrayXd::Zero(b.size());
  ArrayXd r = b - sys.apply(u);
  if (std::sqrt(r.square().sum()) <= tol * norm_b) return u;
  ArrayXd z = sys.precond * r;
  ArrayXd p = z;
  double rz = (r * z).sum();
  for (int it = 0; it < max_iter; ++it) {
    const ArrayXd hp = sys.apply(p);
    const double alpha = rz / (p * hp).sum();
    u += alpha * p;
    r -= alpha * hp;
    if (std::sqrt(r.square().sum()) <= tol * norm_b) return u;
    z = sys.precond * r;
    const double rz_new = (r * z).sum();
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolverError("midpoint system failed to reach tolerance",
                    std::sqrt(r.square().sum()) / norm_b);
}

}  // namespace

WaveTrajectory solve_wave(const SpectralField& z0, const SpectralField& zt0,
                          const WaveProblem& prob) {
  if (!prob.coeff) throw std::invalid_argument("wave problem needs a coefficient");
  const long n = step_count(prob.t_end, prob.dt, "solve_wave");
  const BasisPtr& basis = z0.basis;
  if (!zt0.basis || !zt0.basis->same_layout(*basis))
    throw std::invalid_argument("z0 and zt0 must share a basis");
  const ArrayXd& lam = basis->eigenvalues();
  const double h = prob.dt;
  const double c = h * h / 4.0;

  // coercivity must hold before the first step
  {
    const GridField a0 = prob.coeff(0.0);
    const double amin = a0.val.minCoeff();
    if (!(amin >= prob.coercivity_floor)) throw CoercivityError(amin);
  }

  WaveTrajectory traj;
  traj.times.reserve(n + 1);
  traj.z.reserve(n + 1);
  traj.zt.reserve(n + 1);
  traj.times.push_back(0.0);
  traj.z.push_back(z0);
  traj.zt.push_back(zt0);

  SpectralField z = z0, v = zt0;
  for (long i = 0; i < n; ++i) {
    const double t_mid = (i + 0.5) * h;
    const GridField a_mid = prob.coeff(t_mid);
    if (!a_mid.basis || !a_mid.basis->same_layout(*basis))
      throw std::invalid_argument("wave coefficient on mismatched basis");
    const double amin = a_mid.val.minCoeff();
    if (!(amin >= prob.coercivity_floor)) throw CoercivityError(amin);

    MidpointSystem sys;
    sys.basis = basis;
    sys.w = a_mid.val.inverse();
    sys.c = c;
    const double mean_a = a_mid.val.mean();
    sys.precond = (1.0 / mean_a + c * lam).inverse();

    // rhs = W(z + dt v) - c A z + (dt^2/2) W f_mid
    GridField lin = to_grid({basis, z.coef + h * v.coef});
    SpectralField f_mid = eval_or_zero(prob.forcing, t_mid, basis);
    lin.val = sys.w * (lin.val + 2.0 * c * to_grid(f_mid).val);
    ArrayXd b = to_spectral(lin).coef - c * lam * z.coef;

    ArrayXd z_next = solve_cg(sys, b, z.coef, prob.solver_tol, prob.max_cg_iter);
    v.coef = (2.0 / h) * (z_next - z.coef) - v.coef;
    z.coef = std::move(z_next);

    traj.times.push_back((i + 1) * h);
    traj.z.push_back(z);
    traj.zt.push_back(v);
  }
  return traj;
}

double rho_metric(const StateTrajectory& a, const StateTrajectory& b) {
  if (a.times.size() != b.times.size() || a.states.size() != a.times.size() ||
      b.states.size() != b.times.size())
    throw std::invalid_argument("rho metric needs aligned trajectories");
  double worst = 0.0;
  for (size_t i = 0; i < a.times.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-12)
      throw std::invalid_argument("rho metric needs matching sample times");
    const PlateState& sa = a.states[i];
    const PlateState& sb = b.states[i];
    SpectralField dz{sa.z.basis, sa.z.coef - sb.z.coef};
    SpectralField dzt{sa.zt.basis, sa.zt.coef - sb.zt.coef};
    SpectralField dth{sa.theta.basis, sa.theta.coef - sb.theta.coef};
    const double sq = inner_product(dz, dz) + inner_product(dzt, dzt) + sobolev_sq(dz, 1.0) +
                      inner_product(dth, dth) + sobolev_sq(dth, 1.0);
    worst = std::max(worst, sq);
  }
  return std::sqrt(worst);
}

namespace {

SpectralField interp(const std::vector<SpectralField>& samples, double dt, double t) {
  const double x = t / dt;
  const auto n = static_cast<long>(samples.size()) - 1;
  long i0 = static_cast<long>(std::floor(x));
  i0 = std::max(0L, std::min(i0, n - 1));
  const double frac = std::min(1.0, std::max(0.0, x - i0));
  SpectralField out = samples[i0];
  if (frac != 0.0) out.coef = (1.0 - frac) * out.coef + frac * samples[i0 + 1].coef;
  return out;
}

// (1 - K) u: coefficient-wise gamma*lambda/(1 + gamma*lambda)
SpectralField one_minus_K(const SpectralField& f, double gamma) {
  const ArrayXd& lam = f.basis->eigenvalues();
  return {f.basis, f.coef * (gamma * lam) / (1.0 + gamma * lam)};
}

struct WindowIterate {
  std::vector<SpectralField> z, zt, theta;
};

}  // namespace

KatoResult kato_fixed_point(const PlateState& init, const ModelParams& p,
                            const KatoConfig& cfg) {
  check_state(init);
  p.validate();
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw std::invalid_argument("damping must lie in (0, 1]");
  if (!(cfg.window > 0.0)) throw std::invalid_argument("window must be positive");
  step_count(cfg.t_end, cfg.dt, "kato_fixed_point");

  const BasisPtr& basis = init.basis();
  const ArrayXd& lam = basis->eigenvalues();
  const bool cubic = p.law.kind == StiffnessLaw::Kind::cubic;

  KatoResult result;
  result.traj.times.push_back(0.0);
  result.traj.states.push_back(init);

  PlateState cursor = init;
  double t_cursor = 0.0;
  double window = cfg.window;
  int halvings = 0;

  while (t_cursor < cfg.t_end - 0.5 * cfg.dt) {
    const double w_len = std::min(window, cfg.t_end - t_cursor);
    const long m = std::lround(w_len / cfg.dt);
    if (m < 1) throw std::invalid_argument("window shorter than one step");
    const double w_end = m * cfg.dt;

    // seed iterate: first-order Taylor extension of the window's initial state
    WindowIterate iter;
    iter.z.resize(m + 1, cursor.z);
    iter.zt.resize(m + 1, cursor.zt);
    iter.theta.resize(m + 1, cursor.theta);
    for (long i = 1; i <= m; ++i) iter.z[i].coef += (i * cfg.dt) * cursor.zt.coef;

    std::vector<double> rho_hist;
    bool window_done = false;
    int rising = 0;

    for (int it = 0; it < cfg.max_iter && !window_done; ++it) {
      // temperature from the frozen iterate:
      //   theta_t - (eta/beta) Laplace(theta) = -(1/beta)(alpha zbar_t + sigma thetabar)
      HeatProblem hp;
      hp.diffusivity = p.eta / p.beta;
      hp.dt = cfg.dt;
      hp.t_end = w_end;
      hp.source = [&](double t) {
        const long i = std::lround(t / cfg.dt);
        SpectralField g = zero_field(basis);
        g.coef = -(p.alpha * iter.zt[i].coef + p.sigma * iter.theta[i].coef) / p.beta;
        return g;
      };
      HeatTrajectory heat = solve_heat(cursor.theta, hp);

      // frozen wave problem:
      //   z_tt - (1/gamma) a(zbar) Laplace(z) = fbar
      WaveProblem wp;
      wp.dt = cfg.dt;
      wp.t_end = w_end;
      wp.solver_tol = cfg.solver_tol;
      wp.coeff = [&](double t) {
        const SpectralField zb = interp(iter.z, cfg.dt, t);
        GridField g = to_grid(zb);
        for (Index j = 0; j < g.val.size(); ++j) g.val[j] = p.law(g.val[j], p.omega) / p.gamma;
        return g;
      };
      wp.forcing = [&](double t) {
        const SpectralField zb = interp(iter.z, cfg.dt, t);
        const SpectralField th = interp(heat.theta, cfg.dt, t);
        const GridField zg = to_grid(zb);
        const GridField azg = to_grid(apply_power_of_A(zb, 1.0));
        ArrayXd a_vals(zg.val.size());
        for (Index j = 0; j < zg.val.size(); ++j) a_vals[j] = p.law(zg.val[j], p.omega);
        SpectralField a_az = to_spectral({basis, a_vals * azg.val});
        SpectralField f = zero_field(basis);
        if (cubic && p.omega != 0.0) {
          const auto gz = gradient(zb);
          ArrayXd gsq = gz[0].val.square();
          for (size_t ax = 1; ax < gz.size(); ++ax) gsq += gz[ax].val.square();
          f = to_spectral({basis, 6.0 * p.omega * zg.val * gsq});
        }
        SpectralField out = one_minus_K(f, p.gamma);
        out.coef += apply_K(a_az, p.gamma).coef;
        SpectralField a_theta{basis, lam * th.coef};
        out.coef += cfg.theta_coupling_sign * p.alpha * one_minus_K(a_theta, p.gamma).coef;
        out.coef /= p.gamma;
        return out;
      };
      WaveTrajectory wave = solve_wave(cursor.z, cursor.zt, wp);

      WindowIterate next{std::move(wave.z), std::move(wave.zt), std::move(heat.theta)};
      if (cfg.damping < 1.0) {
        for (long i = 0; i <= m; ++i) {
          next.z[i].coef = (1 - cfg.damping) * iter.z[i].coef + cfg.damping * next.z[i].coef;
          next.zt[i].coef = (1 - cfg.damping) * iter.zt[i].coef + cfg.damping * next.zt[i].coef;
          next.theta[i].coef =
              (1 - cfg.damping) * iter.theta[i].coef + cfg.damping * next.theta[i].coef;
        }
      }

      StateTrajectory ta, tb;
      for (long i = 0; i <= m; ++i) {
        ta.times.push_back(i * cfg.dt);
        tb.times.push_back(i * cfg.dt);
        ta.states.push_back({iter.z[i], iter.zt[i], iter.theta[i]});
        tb.states.push_back({next.z[i], next.zt[i], next.theta[i]});
      }
      const double rho = rho_metric(ta, tb);
      rising = (!rho_hist.empty() && rho > rho_hist.back()) ? rising + 1 : 0;
      rho_hist.push_back(rho);
      iter = std::move(next);
      ++result.total_iterations;

      if (rho <= cfg.tol_rho) window_done = true;
      if (!window_done && rising >= 3) break;
    }

    if (!window_done) {
      if (rising >= 3 && halvings < cfg.max_window_halvings) {
        window /= 2.0;
        ++halvings;
        if (window < cfg.dt) throw NonContractionError(rho_hist);
        continue;  // retry the same stretch with a shorter window
      }
      throw NonContractionError(rho_hist);
    }

    result.rho_history.push_back(std::move(rho_hist));
    ++result.windows;
    for (long i = 1; i <= m; ++i) {
      result.traj.times.push_back(t_cursor + i * cfg.dt);
      result.traj.states.push_back({iter.z[i], iter.zt[i], iter.theta[i]});
    }
    cursor = result.traj.states.back();
    t_cursor += w_end;
  }
  return result;
}

}  // namespace platesim

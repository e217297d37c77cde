#include "platesim/timestepper.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace platesim {

Eigen::Matrix3d linear_block(double lambda, const ModelParams& p) {
  const double bl = lambda * lambda / (1.0 + p.gamma * lambda);  // B(lambda) * lambda
  Eigen::Matrix3d m;
  m << 0.0, 1.0, 0.0,                                                   //
      -bl, 0.0, p.alpha * bl,                                           //
      0.0, -p.alpha / p.beta, -(p.eta * lambda + p.sigma) / p.beta;
  return m;
}

const char* to_string(HaltReason r) {
  switch (r) {
    case HaltReason::completed: return "completed";
    case HaltReason::blowup: return "blowup";
    case HaltReason::hyperbolicity_loss: return "hyperbolicity_loss";
    case HaltReason::solver_failure: return "solver_failure";
  }
  return "unknown";
}

namespace {

// Per-mode propagators E = exp(h M) and the columns of h*phi1(hM), h*phi2(hM)
// that multiply the acceleration slot (the nonlinear vector is (0, g, 0)).
// The three blocks come out of one augmented exponential
//   exp [[hM, I, 0], [0, 0, I], [0, 0, 0]] = [[E, phi1, phi2], ...].
struct ModeTables {
  std::vector<Eigen::Matrix3d> prop;
  std::vector<Eigen::Vector3d> p1;
  std::vector<Eigen::Vector3d> p2;
  Eigen::ArrayXd b;  // B(lambda), mapping Fhat to the forcing slot
};

ModeTables build_tables(const Basis& basis, const ModelParams& p, double dt) {
  const Eigen::ArrayXd& lam = basis.eigenvalues();
  const Eigen::Index n = lam.size();
  ModeTables tb;
  tb.prop.resize(n);
  tb.p1.resize(n);
  tb.p2.resize(n);
  tb.b = lam / (1.0 + p.gamma * lam);
  Eigen::Matrix<double, 9, 9> aug = Eigen::Matrix<double, 9, 9>::Zero();
  aug.block<3, 3>(0, 3).setIdentity();
  aug.block<3, 3>(3, 6).setIdentity();
  for (Eigen::Index k = 0; k < n; ++k) {
    aug.block<3, 3>(0, 0) = dt * linear_block(lam[k], p);
    const Eigen::Matrix<double, 9, 9> e = aug.exp();
    tb.prop[k] = e.block<3, 3>(0, 0);
    tb.p1[k] = dt * e.block<3, 3>(0, 3).col(1);
    tb.p2[k] = dt * e.block<3, 3>(0, 6).col(1);
  }
  return tb;
}

// g = B(lambda) .* Fhat(z), the nonhomogeneous part of the acceleration.
Eigen::ArrayXd nonlin_g(const SpectralField& z, const ModelParams& p, const ModeTables& tb) {
  if (p.omega == 0.0) return Eigen::ArrayXd::Zero(z.coef.size());
  return tb.b * nonlinearity_F_spectral(z, p.omega, -1.0).coef;
}

PlateState propagate(const PlateState& u, const Eigen::ArrayXd& g, const ModeTables& tb,
                     const Eigen::ArrayXd* gdiff) {
  PlateState out = u;
  const Eigen::Index n = u.z.coef.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Vector3d v(u.z.coef[k], u.zt.coef[k], u.theta.coef[k]);
    Eigen::Vector3d w = tb.prop[k] * v + g[k] * tb.p1[k];
    if (gdiff) w += (*gdiff)[k] * tb.p2[k];
    out.z.coef[k] = w[0];
    out.zt.coef[k] = w[1];
    out.theta.coef[k] = w[2];
  }
  return out;
}

PlateState step_etd2(const PlateState& u, const ModelParams& p, const ModeTables& tb) {
  const Eigen::ArrayXd gn = nonlin_g(u.z, p, tb);
  const PlateState pred = propagate(u, gn, tb, nullptr);
  if (p.omega == 0.0) return pred;  // predictor already exact
  const Eigen::ArrayXd diff = nonlin_g(pred.z, p, tb) - gn;
  PlateState out = pred;
  const Eigen::Index n = u.z.coef.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    out.z.coef[k] += diff[k] * tb.p2[k][0];
    out.zt.coef[k] += diff[k] * tb.p2[k][1];
    out.theta.coef[k] += diff[k] * tb.p2[k][2];
  }
  return out;
}

struct Deriv {
  SpectralField dz, dzt, dth;
};

Deriv state_deriv(const PlateState& s, const ModelParams& p) {
  Rhs r = rhs(s, p);
  return {s.zt, std::move(r.ztt), std::move(r.thetat)};
}

PlateState state_axpy(const PlateState& s, double c, const Deriv& d) {
  PlateState out = s;
  out.z.coef += c * d.dz.coef;
  out.zt.coef += c * d.dzt.coef;
  out.theta.coef += c * d.dth.coef;
  return out;
}

PlateState step_rk4(const PlateState& u, const ModelParams& p, double h) {
  const Deriv k1 = state_deriv(u, p);
  const Deriv k2 = state_deriv(state_axpy(u, 0.5 * h, k1), p);
  const Deriv k3 = state_deriv(state_axpy(u, 0.5 * h, k2), p);
  const Deriv k4 = state_deriv(state_axpy(u, h, k3), p);
  PlateState out = u;
  out.z.coef += (h / 6.0) * (k1.dz.coef + 2.0 * k2.dz.coef + 2.0 * k3.dz.coef + k4.dz.coef);
  out.zt.coef +=
      (h / 6.0) * (k1.dzt.coef + 2.0 * k2.dzt.coef + 2.0 * k3.dzt.coef + k4.dzt.coef);
  out.theta.coef +=
      (h / 6.0) * (k1.dth.coef + 2.0 * k2.dth.coef + 2.0 * k3.dth.coef + k4.dth.coef);
  return out;
}

// Trapezoid accumulator for the dissipation identity across recorded samples.
struct IdentityAccum {
  bool first = true;
  double e1b0 = 0.0, t_prev = 0.0, d_prev = 0.0, w_prev = 0.0;
  double cum_d = 0.0, cum_w = 0.0;
};

EnergyReport sample_diagnostics(const PlateState& s, double t, const ModelParams& p,
                                IdentityAccum& acc) {
  EnergyReport rep = energy_levels(s, p);
  rep.t = t;
  const double d = p.eta * sobolev_sq(s.theta, 2.0) + p.sigma * sobolev_sq(s.theta, 1.0);
  const double w = (p.law.kind == StiffnessLaw::Kind::cubic && p.omega != 0.0)
                       ? inner_product(nonlinearity_F(s.z, p.omega), s.zt)
                       : 0.0;
  if (acc.first) {
    acc.first = false;
    acc.e1b0 = rep.e1_beta;
  } else {
    const double h = t - acc.t_prev;
    acc.cum_d += 0.5 * h * (d + acc.d_prev);
    acc.cum_w += 0.5 * h * (w + acc.w_prev);
  }
  acc.t_prev = t;
  acc.d_prev = d;
  acc.w_prev = w;
  rep.cum_dissipation = acc.cum_d;
  rep.cum_work = acc.cum_w;
  rep.identity_residual = std::abs(rep.e1_beta - acc.e1b0 + acc.cum_d - acc.cum_w);
  return rep;
}

long long step_count(double dt, double t_end) {
  const long long n = std::llround(t_end / dt);
  if (n < 1 || std::abs(static_cast<double>(n) * dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument("dt must divide the run horizon");
  return n;
}

Trajectory run_kato(const PlateState& init, const ModelParams& p, const SchemeSpec& scheme,
                    const RunControl& control) {
  KatoConfig cfg = scheme.kato;
  cfg.dt = scheme.dt;
  cfg.t_end = control.t_end;

  Trajectory out;
  IdentityAccum acc;
  out.times.push_back(0.0);
  if (control.keep_states) out.states.push_back(init);
  out.diagnostics.push_back(sample_diagnostics(init, 0.0, p, acc));
  const double x0 = out.diagnostics.front().x;
  const double thresh = control.blowup_factor * (x0 > 0.0 ? x0 : 1.0);

  StateTrajectory traj;
  try {
    KatoResult kr = kato_fixed_point(init, p, cfg);
    traj = std::move(kr.traj);
    out.kato_rho = std::move(kr.rho_history);
    out.kato_windows = kr.windows;
    out.kato_iterations = kr.total_iterations;
  } catch (const CoercivityError&) {
    out.halt_reason = HaltReason::hyperbolicity_loss;
    return out;
  } catch (const NonContractionError&) {
    out.halt_reason = HaltReason::solver_failure;
    return out;
  } catch (const SolverError&) {
    out.halt_reason = HaltReason::solver_failure;
    return out;
  }

  const size_t last = traj.times.size() - 1;
  for (size_t i = 1; i < traj.times.size(); ++i) {
    if (i % static_cast<size_t>(control.sample_every) != 0 && i != last) continue;
    out.times.push_back(traj.times[i]);
    if (control.keep_states) out.states.push_back(traj.states[i]);
    out.diagnostics.push_back(sample_diagnostics(traj.states[i], traj.times[i], p, acc));
    if (!(out.diagnostics.back().x <= thresh)) {
      out.halt_reason = HaltReason::blowup;
      break;
    }
  }
  return out;
}

}  // namespace

Trajectory run(const PlateState& init, const ModelParams& p, const SchemeSpec& scheme,
               const RunControl& control) {
  p.validate();
  check_state(init);
  if (!(scheme.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(control.t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (control.sample_every < 1) throw std::invalid_argument("sample_every must be at least 1");
  if (!(control.blowup_factor > 1.0))
    throw std::invalid_argument("blowup_factor must exceed 1");
  const long long steps = step_count(scheme.dt, control.t_end);

  const bool exponential =
      scheme.kind == SchemeKind::etd2 || scheme.kind == SchemeKind::imex;
  if (exponential && p.law.kind != StiffnessLaw::Kind::cubic)
    throw std::invalid_argument("exponential schemes support only the cubic stiffness law");

  if (scheme.kind == SchemeKind::kato) return run_kato(init, p, scheme, control);

  ModeTables tb;
  if (exponential) tb = build_tables(*init.basis(), p, scheme.dt);

  // a = 1 + 3 omega z^2 never loses positivity for omega >= 0, and a positive
  // constant law never moves; everything else is watched step by step.
  const bool watch_a =
      !(p.law.kind == StiffnessLaw::Kind::cubic && p.omega >= 0.0) &&
      !(p.law.kind == StiffnessLaw::Kind::constant &&
        p.law.value > control.hyperbolicity_floor);

  Trajectory out;
  IdentityAccum acc;
  PlateState u = init;
  out.times.push_back(0.0);
  if (control.keep_states) out.states.push_back(u);
  out.diagnostics.push_back(sample_diagnostics(u, 0.0, p, acc));
  const double x0 = out.diagnostics.front().x;
  const double thresh = control.blowup_factor * (x0 > 0.0 ? x0 : 1.0);

  Eigen::ArrayXd g_prev;
  try {
    for (long long n = 1; n <= steps; ++n) {
      switch (scheme.kind) {
        case SchemeKind::etd2:
          u = step_etd2(u, p, tb);
          break;
        case SchemeKind::imex:
          if (g_prev.size() == 0) {
            g_prev = nonlin_g(u.z, p, tb);
            u = step_etd2(u, p, tb);
          } else {
            Eigen::ArrayXd g_n = nonlin_g(u.z, p, tb);
            const Eigen::ArrayXd diff = g_n - g_prev;
            u = propagate(u, g_n, tb, &diff);
            g_prev = std::move(g_n);
          }
          break;
        case SchemeKind::rk4:
          u = step_rk4(u, p, scheme.dt);
          break;
        case SchemeKind::kato:
          break;  // handled above
      }
      const double t = static_cast<double>(n) * scheme.dt;
      if (!(u.z.coef.allFinite() && u.zt.coef.allFinite() && u.theta.coef.allFinite())) {
        out.halt_reason = HaltReason::blowup;
        break;
      }
      if (watch_a &&
          !(hyperbolicity_min(u.z, p.law, p.omega) > control.hyperbolicity_floor)) {
        out.halt_reason = HaltReason::hyperbolicity_loss;
        break;
      }
      if (n % control.sample_every == 0 || n == steps) {
        out.times.push_back(t);
        if (control.keep_states) out.states.push_back(u);
        out.diagnostics.push_back(sample_diagnostics(u, t, p, acc));
        if (!(out.diagnostics.back().x <= thresh)) {
          out.halt_reason = HaltReason::blowup;
          break;
        }
      }
    }
  } catch (const HyperbolicityError&) {
    out.halt_reason = HaltReason::hyperbolicity_loss;
  } catch (const CoercivityError&) {
    out.halt_reason = HaltReason::hyperbolicity_loss;
  } catch (const NonContractionError&) {
    out.halt_reason = HaltReason::solver_failure;
  } catch (const SolverError&) {
    out.halt_reason = HaltReason::solver_failure;
  }
  return out;
}

}  // namespace platesim

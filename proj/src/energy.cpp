#include "platesim/energy.hpp"

#include <cmath>
#include <limits>

namespace platesim {

EnergyReport energy_levels(const PlateState& s, const ModelParams& p) {
  check_state(s);
  p.validate();
  const Rhs r = rhs(s, p);

  EnergyReport rep;
  const double th1 = sobolev_sq(s.theta, 1.0);
  rep.e1 = 0.5 * sobolev_sq(s.zt, -1.0) + 0.5 * p.gamma * inner_product(s.zt, s.zt) +
           0.5 * sobolev_sq(s.z, 1.0) + 0.5 * th1;
  rep.e1_beta = rep.e1 + 0.5 * (p.beta - 1.0) * th1;
  rep.e2 = 0.5 * inner_product(s.zt, s.zt) + 0.5 * p.gamma * sobolev_sq(s.zt, 1.0) +
           0.5 * sobolev_sq(s.z, 2.0) + 0.5 * sobolev_sq(s.theta, 2.0);
  rep.e3 = 0.5 * inner_product(r.ztt, r.ztt) + 0.5 * p.gamma * sobolev_sq(r.ztt, 1.0) +
           0.5 * sobolev_sq(s.zt, 2.0) + 0.5 * sobolev_sq(r.thetat, 2.0);
  rep.x = rep.e2 + rep.e3;
  rep.min_a = hyperbolicity_min(s.z, p.law, p.omega);
  const double high = sobolev_sq(s.z, 3.0);
  rep.boost_ratio = (rep.x > 0.0) ? high / (rep.x + rep.x * rep.x * rep.x) : 0.0;
  return rep;
}

double boost_ratio(const PlateState& s, const ModelParams& p) {
  return energy_levels(s, p).boost_ratio;
}

double identity_residual(const std::vector<double>& times,
                         const std::vector<PlateState>& states, const ModelParams& p) {
  if (times.size() != states.size() || times.size() < 2)
    throw std::invalid_argument("identity residual needs an aligned sampled trajectory");
  double e1b_first = 0.0, e1b_last = 0.0, diss = 0.0, work = 0.0;
  double d_prev = 0.0, w_prev = 0.0;
  for (size_t i = 0; i < times.size(); ++i) {
    const PlateState& s = states[i];
    const double d = p.eta * sobolev_sq(s.theta, 2.0) + p.sigma * sobolev_sq(s.theta, 1.0);
    const double w = inner_product(nonlinearity_F(s.z, p.omega), s.zt);
    if (i > 0) {
      const double h = times[i] - times[i - 1];
      diss += 0.5 * h * (d + d_prev);
      work += 0.5 * h * (w + w_prev);
    }
    d_prev = d;
    w_prev = w;
    const double e1b = energy_levels(s, p).e1_beta;
    if (i == 0) e1b_first = e1b;
    if (i + 1 == times.size()) e1b_last = e1b;
  }
  return std::abs(e1b_last - e1b_first + diss - work);
}

DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& x,
                   const DecayFitOptions& opt) {
  if (times.size() != x.size() || times.size() < 3)
    throw std::invalid_argument("decay fit needs at least three samples");
  DecayFit fit;
  const double x0 = x.front();
  double xmax = 0.0;
  for (double v : x) xmax = std::max(xmax, v);
  if (!(xmax > 0.0)) return fit;  // identically zero: no rate to fit

  const double t0 = times.front(), t1 = times.back();
  fit.t_lo = t0 + opt.skip_head * (t1 - t0);
  fit.t_hi = t1 - opt.skip_tail * (t1 - t0);
  const double floor = opt.floor_rel * (x0 > 0.0 ? x0 : xmax);

  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0, n = 0;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < fit.t_lo || times[i] > fit.t_hi) continue;
    const double y = std::log(std::max(x[i], floor));
    st += times[i];
    sy += y;
    stt += times[i] * times[i];
    sty += times[i] * y;
    syy += y * y;
    n += 1;
  }
  if (n < 2) throw std::invalid_argument("decay fit window contains fewer than two samples");
  const double det = n * stt - st * st;
  const double slope = (n * sty - st * sy) / det;
  const double icept = (sy * stt - st * sty) / det;
  fit.k = -slope;

  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < fit.t_lo || times[i] > fit.t_hi) continue;
    const double y = std::log(std::max(x[i], floor));
    const double e = y - (icept + slope * times[i]);
    ss_res += e * e;
  }
  fit.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;

  // inflate C until the bound X(t) <= C exp(-kt) X(0) covers every window sample
  const double ref = (x0 > 0.0) ? x0 : xmax;
  fit.C = std::exp(icept) / ref;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < fit.t_lo || times[i] > fit.t_hi) continue;
    fit.C = std::max(fit.C, x[i] / (std::exp(-fit.k * times[i]) * ref));
  }
  return fit;
}

double barrier_k(double x, const BarrierConstants& c) {
  const double x2 = x * x, x4 = x2 * x2;
  return x - c.C4 * (x2 + x4 + x2 * x4 + x4 * x4);
}

double barrier_h(double x, const BarrierConstants& c) {
  const double x2 = x * x, x3 = x2 * x, x15 = std::pow(x, 1.5);
  return c.C1 * x -
         c.C3 * (x15 + x2 + x3 + x2 * x2 + x15 * x3 + x3 * x3 + x3 * x3 * x3);
}

namespace {

// bisect a function with f(lo) and f(hi) of opposite sign
template <class F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((flo <= 0.0) == (fm <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

// unique positive root of x -> pos(x) - drop(x) with drop increasing from 0
template <class F>
bool bracket_root(F f, double* lo, double* hi) {
  *lo = 1e-300;
  *hi = 1.0;
  for (int it = 0; it < 200 && f(*hi) > 0.0; ++it) *hi *= 2.0;
  return f(*hi) <= 0.0;
}

}  // namespace

BarrierReport barrier_roots(const BarrierConstants& c, double x0) {
  if (!(x0 >= 0.0)) throw std::invalid_argument("X(0) must be nonnegative");
  BarrierReport rep;
  rep.x0 = x0;

  if (c.C4 > 0.0) {
    auto k = [&](double x) { return barrier_k(x, c); };
    double lo, hi;
    rep.eta_unbounded = !bracket_root(k, &lo, &hi);
    if (!rep.eta_unbounded) rep.eta_root = bisect(k, lo, hi);
  } else {
    rep.eta_unbounded = true;  // k(x) = x never returns to zero
  }

  if (c.C3 > 0.0 && c.C1 > 0.0) {
    auto h = [&](double x) { return barrier_h(x, c); };
    double lo, hi;
    rep.xi_unbounded = !bracket_root(h, &lo, &hi);
    if (!rep.xi_unbounded) rep.xi_root = bisect(h, lo, hi);
  } else if (c.C3 <= 0.0) {
    rep.xi_unbounded = true;  // h stays positive
  } else {
    rep.xi_root = 0.0;  // C1 <= 0: h never rises above zero, the band collapses
  }

  // peak of k and the bands k(y) <= C2 X(0)
  if (!rep.eta_unbounded) {
    auto kp = [&](double x) {
      const double x2 = x * x;
      return 1.0 - c.C4 * (2 * x + 4 * x * x2 + 6 * x * x2 * x2 + 8 * x * x2 * x2 * x2);
    };
    rep.k_argmax = bisect(kp, 1e-300, rep.eta_root);
    rep.k_max = barrier_k(rep.k_argmax, c);
    const double level = c.C2 * x0;
    rep.bands_defined = level < rep.k_max;
    if (rep.bands_defined) {
      auto shifted = [&](double x) { return barrier_k(x, c) - level; };
      rep.delta1 = (level <= 0.0) ? 0.0 : bisect(shifted, 1e-300, rep.k_argmax);
      rep.delta2 = bisect([&](double x) { return -shifted(x); }, rep.k_argmax, rep.eta_root);
    }
  } else {
    // k is increasing without a peak: every level is reached exactly once
    rep.k_max = std::numeric_limits<double>::infinity();
    rep.bands_defined = true;
    rep.delta1 = c.C2 * x0;  // k(y) = y here
    rep.delta2 = std::numeric_limits<double>::infinity();
  }

  const double xi_lim =
      rep.xi_unbounded ? std::numeric_limits<double>::infinity() : rep.xi_root;
  rep.admissible = rep.bands_defined && x0 <= rep.delta1 && x0 <= xi_lim;
  return rep;
}

BarrierMargins barrier_eval(const std::vector<double>& times, const std::vector<double>& x,
                            const BarrierConstants& c) {
  if (times.size() != x.size() || times.empty())
    throw std::invalid_argument("barrier evaluation needs aligned samples");
  BarrierMargins m;
  m.margin.reserve(times.size());
  const double level = c.C2 * x.front();
  double integral = 0.0;
  m.worst = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < times.size(); ++i) {
    if (i > 0)
      integral += 0.5 * (times[i] - times[i - 1]) *
                  (barrier_h(x[i], c) + barrier_h(x[i - 1], c));
    const double margin = level - barrier_k(x[i], c) - integral;
    m.margin.push_back(margin);
    m.worst = std::min(m.worst, margin);
  }
  m.holds = m.worst >= 0.0;
  return m;
}

AprioriFit apriori_constants(const std::vector<double>& times, const std::vector<double>& x) {
  if (times.size() != x.size() || times.size() < 3)
    throw std::invalid_argument("constant fit needs at least three samples");
  AprioriFit fit;
  fit.c = {0.0, 0.0, 0.0, 0.0};
  double xmax = 0.0;
  for (double v : x) xmax = std::max(xmax, v);
  if (!(xmax > 0.0)) {
    fit.slack = std::numeric_limits<double>::infinity();
    return fit;
  }

  fit.c.C1 = std::max(0.0, fit_decay(times, x).k);
  const double x0 = x.front();

  // cumulative trapezoids of X and of the superlinear bundle
  const size_t n = times.size();
  std::vector<double> ix(n, 0.0), isup(n, 0.0), bnd(n, 0.0);
  auto sup = [](double v) {
    const double v2 = v * v, v3 = v2 * v;
    return std::pow(v, 1.5) + v2 + v3 + v2 * v2 + v3 * v3;
  };
  for (size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double h = times[i] - times[i - 1];
      ix[i] = ix[i - 1] + 0.5 * h * (x[i] + x[i - 1]);
      isup[i] = isup[i - 1] + 0.5 * h * (sup(x[i]) + sup(x[i - 1]));
    }
    const double v2 = x[i] * x[i], v4 = v2 * v2;
    bnd[i] = v2 + v4 + v2 * v4 + v4 * v4;
  }

  for (size_t i = 0; i < n; ++i) {
    const double lhs = x[i] + fit.c.C1 * ix[i];
    const double rhs = fit.c.C2 * x0 + fit.c.C3 * isup[i] + fit.c.C4 * bnd[i];
    if (lhs <= rhs) continue;
    // inflate past re-check rounding: the bound must survive a fresh evaluation
    const double deficit = (lhs - rhs) + 1e-13 * (1.0 + std::abs(lhs) + std::abs(rhs));
    if (x0 >= isup[i] && x0 >= bnd[i] && x0 > 0.0)
      fit.c.C2 += deficit / x0;
    else if (isup[i] >= bnd[i] && isup[i] > 0.0)
      fit.c.C3 += deficit / isup[i];
    else if (bnd[i] > 0.0)
      fit.c.C4 += deficit / bnd[i];
  }

  fit.slack = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    const double lhs = x[i] + fit.c.C1 * ix[i];
    const double rhs = fit.c.C2 * x0 + fit.c.C3 * isup[i] + fit.c.C4 * bnd[i];
    fit.slack = std::min(fit.slack, rhs - lhs);
  }
  return fit;
}

}  // namespace platesim

#include "platesim/runner.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace platesim {

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key or value");
    if (!kv.emplace(key, val).second)
      throw std::invalid_argument("duplicate configuration key: " + key);
  }
  return kv;
}

double parse_double(const std::string& s, const std::string& key) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a number: '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument(key + ": trailing text in '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& key) {
  size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not an integer: '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument(key + ": trailing text in '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw std::invalid_argument(key + ": not a boolean: '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

// Tracks which keys were consumed so leftovers can be rejected.
struct KvReader {
  const std::map<std::string, std::string>& kv;
  std::set<std::string> used;

  const std::string* find(const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) return nullptr;
    used.insert(k);
    return &it->second;
  }
  bool has(const std::string& k) const { return kv.count(k) != 0; }
  std::string str(const std::string& k, const std::string& def) {
    const std::string* v = find(k);
    return v ? *v : def;
  }
  double num(const std::string& k, double def) {
    const std::string* v = find(k);
    return v ? parse_double(*v, k) : def;
  }
  long integer(const std::string& k, long def) {
    const std::string* v = find(k);
    return v ? parse_long(*v, k) : def;
  }
  bool flag(const std::string& k, bool def) {
    const std::string* v = find(k);
    return v ? parse_bool(*v, k) : def;
  }
  std::vector<double> dlist(const std::string& k, const std::vector<double>& def) {
    const std::string* v = find(k);
    if (!v) return def;
    std::vector<double> out;
    for (const std::string& item : split_list(*v)) out.push_back(parse_double(item, k));
    if (out.empty()) throw std::invalid_argument(k + ": empty list");
    return out;
  }
  std::vector<int> ilist(const std::string& k, const std::vector<int>& def) {
    const std::string* v = find(k);
    if (!v) return def;
    std::vector<int> out;
    for (const std::string& item : split_list(*v))
      out.push_back(static_cast<int>(parse_long(item, k)));
    if (out.empty()) throw std::invalid_argument(k + ": empty list");
    return out;
  }
  void finish() const {
    for (const auto& [k, v] : kv)
      if (!used.count(k)) throw std::invalid_argument("unknown configuration key: " + k);
  }
};

const std::set<std::string>& scenario_names() {
  static const std::set<std::string> names = {
      "small_data_decay", "energy_identity",  "kato_vs_direct",     "linear_analytic",
      "boost_check",      "barrier_probe",    "hyperbolicity_probe"};
  return names;
}

SchemeKind parse_scheme(const std::string& s) {
  if (s == "etd2") return SchemeKind::etd2;
  if (s == "imex") return SchemeKind::imex;
  if (s == "rk4") return SchemeKind::rk4;
  if (s == "kato") return SchemeKind::kato;
  throw std::invalid_argument("scheme.kind: unknown scheme '" + s + "'");
}

const char* scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::etd2: return "etd2";
    case SchemeKind::imex: return "imex";
    case SchemeKind::rk4: return "rk4";
    case SchemeKind::kato: return "kato";
  }
  return "unknown";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

std::string fmt_ilist(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

RunConfig config_from_map(const std::map<std::string, std::string>& kv) {
  KvReader r{kv, {}};
  RunConfig cfg;

  cfg.scenario = r.str("scenario", cfg.scenario);
  if (!scenario_names().count(cfg.scenario))
    throw std::invalid_argument("unknown scenario: " + cfg.scenario);

  cfg.lengths = r.dlist("domain.lengths", {1.0, 1.0});
  const int dim = static_cast<int>(cfg.lengths.size());
  cfg.modes = r.ilist("domain.modes", {32});
  if (cfg.modes.size() == 1) cfg.modes.assign(dim, cfg.modes[0]);
  if (static_cast<int>(cfg.modes.size()) != dim)
    throw std::invalid_argument("domain.modes: expected one entry or one per axis");
  cfg.dealias = static_cast<int>(r.integer("domain.dealias", 2));

  cfg.params.alpha = r.num("model.alpha", 1.0);
  cfg.params.beta = r.num("model.beta", 1.0);
  cfg.params.gamma = r.num("model.gamma", 1.0);
  cfg.params.eta = r.num("model.eta", 1.0);
  cfg.params.sigma = r.num("model.sigma", 1.0);
  cfg.params.omega = r.num("model.omega", 1.0);

  const std::string law = r.str("model.law", "cubic");
  if (law == "cubic") {
    cfg.params.law = StiffnessLaw::cubic();
    if (r.has("model.law.value") || r.has("model.law.zeta") || r.has("model.law.a"))
      throw std::invalid_argument("model.law.value/zeta/a require a non-cubic law");
  } else if (law == "constant") {
    cfg.params.law = StiffnessLaw::constant(r.num("model.law.value", 1.0));
    if (r.has("model.law.zeta") || r.has("model.law.a"))
      throw std::invalid_argument("model.law.zeta/a require model.law = tabulated");
  } else if (law == "tabulated") {
    const std::vector<double> zeta = r.dlist("model.law.zeta", {});
    const std::vector<double> a = r.dlist("model.law.a", {});
    if (zeta.empty() || a.empty())
      throw std::invalid_argument("model.law = tabulated requires model.law.zeta and model.law.a");
    cfg.params.law = StiffnessLaw::tabulated(zeta, a);
  } else {
    throw std::invalid_argument("model.law: unknown law '" + law + "'");
  }

  cfg.scheme.kind = parse_scheme(r.str("scheme.kind", "etd2"));
  cfg.scheme.dt = r.num("scheme.dt", 1e-3);
  cfg.scheme.kato.window = r.num("kato.window", 0.1);
  cfg.scheme.kato.tol_rho = r.num("kato.tol_rho", 1e-10);
  cfg.scheme.kato.max_iter = static_cast<int>(r.integer("kato.max_iter", 60));
  cfg.scheme.kato.damping = r.num("kato.damping", 1.0);
  cfg.scheme.kato.theta_coupling_sign = r.num("kato.theta_sign", 1.0);
  cfg.scheme.kato.solver_tol = r.num("kato.solver_tol", 1e-12);
  cfg.scheme.kato.max_window_halvings =
      static_cast<int>(r.integer("kato.max_window_halvings", 6));

  cfg.control.t_end = r.num("run.t_end", 1.0);
  cfg.control.sample_every = static_cast<int>(r.integer("run.sample_every", 1));
  cfg.control.blowup_factor = r.num("run.blowup_factor", 1e6);
  cfg.control.hyperbolicity_floor = r.num("run.hyperbolicity_floor", 0.0);

  cfg.init_kind = r.str("init.kind", "multi_mode");
  static const std::set<std::string> kinds = {"single_mode", "multi_mode", "gaussian",
                                              "random"};
  if (!kinds.count(cfg.init_kind))
    throw std::invalid_argument("init.kind: unknown kind '" + cfg.init_kind + "'");
  cfg.init_form = r.str("init.form", "w");
  if (cfg.init_form != "w" && cfg.init_form != "z")
    throw std::invalid_argument("init.form must be 'w' or 'z'");
  cfg.amplitude = r.num("init.amplitude", 1e-3);
  cfg.zt_amplitude = r.num("init.zt_amplitude", 0.0);
  cfg.theta_amplitude = r.num("init.theta_amplitude", 0.0);
  cfg.init_mode = r.ilist("init.mode", {1});
  if (cfg.init_mode.size() == 1) cfg.init_mode.assign(dim, cfg.init_mode[0]);
  if (static_cast<int>(cfg.init_mode.size()) != dim)
    throw std::invalid_argument("init.mode: expected one entry or one per axis");
  cfg.init_count = static_cast<int>(r.integer("init.count", 3));
  if (cfg.init_count < 1) throw std::invalid_argument("init.count must be at least 1");
  cfg.init_width = r.num("init.width", 0.0);
  {
    const std::string* v = r.find("init.seed");
    if (v) {
      try {
        size_t pos = 0;
        cfg.seed = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::invalid_argument("init.seed: not an unsigned integer: '" + *v + "'");
      }
    }
  }

  cfg.barrier_fit = r.flag("barrier.fit", true);
  cfg.barrier_c.C1 = r.num("barrier.C1", 1.0);
  cfg.barrier_c.C2 = r.num("barrier.C2", 1.0);
  cfg.barrier_c.C3 = r.num("barrier.C3", 1.0);
  cfg.barrier_c.C4 = r.num("barrier.C4", 1.0);

  r.finish();
  cfg.params.validate();
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  return config_from_map(parse_kv_text(text));
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::map<std::string, std::string> kv = parse_kv_text(buf.str());
  for (const std::string& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must be key=value: " + ov);
    const std::string key = trim(ov.substr(0, eq));
    const std::string val = trim(ov.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("override must be key=value: " + ov);
    kv[key] = val;
  }
  return config_from_map(kv);
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["scenario"] = scenario;
  m["domain.lengths"] = fmt_list(lengths);
  m["domain.modes"] = fmt_ilist(modes);
  m["domain.dealias"] = std::to_string(dealias);
  m["model.alpha"] = fmt(params.alpha);
  m["model.beta"] = fmt(params.beta);
  m["model.gamma"] = fmt(params.gamma);
  m["model.eta"] = fmt(params.eta);
  m["model.sigma"] = fmt(params.sigma);
  m["model.omega"] = fmt(params.omega);
  switch (params.law.kind) {
    case StiffnessLaw::Kind::cubic:
      m["model.law"] = "cubic";
      break;
    case StiffnessLaw::Kind::constant:
      m["model.law"] = "constant";
      m["model.law.value"] = fmt(params.law.value);
      break;
    case StiffnessLaw::Kind::tabulated:
      m["model.law"] = "tabulated";
      m["model.law.zeta"] = fmt_list(params.law.zeta);
      m["model.law.a"] = fmt_list(params.law.a_nodes);
      break;
  }
  m["scheme.kind"] = scheme_name(scheme.kind);
  m["scheme.dt"] = fmt(scheme.dt);
  m["kato.window"] = fmt(scheme.kato.window);
  m["kato.tol_rho"] = fmt(scheme.kato.tol_rho);
  m["kato.max_iter"] = std::to_string(scheme.kato.max_iter);
  m["kato.damping"] = fmt(scheme.kato.damping);
  m["kato.theta_sign"] = fmt(scheme.kato.theta_coupling_sign);
  m["kato.solver_tol"] = fmt(scheme.kato.solver_tol);
  m["kato.max_window_halvings"] = std::to_string(scheme.kato.max_window_halvings);
  m["run.t_end"] = fmt(control.t_end);
  m["run.sample_every"] = std::to_string(control.sample_every);
  m["run.blowup_factor"] = fmt(control.blowup_factor);
  m["run.hyperbolicity_floor"] = fmt(control.hyperbolicity_floor);
  m["init.kind"] = init_kind;
  m["init.form"] = init_form;
  m["init.amplitude"] = fmt(amplitude);
  m["init.zt_amplitude"] = fmt(zt_amplitude);
  m["init.theta_amplitude"] = fmt(theta_amplitude);
  m["init.mode"] = fmt_ilist(init_mode);
  m["init.count"] = std::to_string(init_count);
  m["init.width"] = fmt(init_width);
  {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%" PRIu64, static_cast<uint64_t>(seed));
    m["init.seed"] = buf;
  }
  m["barrier.fit"] = barrier_fit ? "true" : "false";
  m["barrier.C1"] = fmt(barrier_c.C1);
  m["barrier.C2"] = fmt(barrier_c.C2);
  m["barrier.C3"] = fmt(barrier_c.C3);
  m["barrier.C4"] = fmt(barrier_c.C4);
  return m;
}

BasisPtr config_basis(const RunConfig& cfg) {
  return build_basis({cfg.lengths}, cfg.modes, cfg.dealias);
}

PlateState initial_state(const RunConfig& cfg, const BasisPtr& basis) {
  const ArrayXd& lam = basis->eigenvalues();
  SpectralField w0 = zero_field(basis);
  SpectralField w1 = zero_field(basis);
  SpectralField th = zero_field(basis);

  if (cfg.init_kind == "single_mode") {
    const std::vector<int>& m = basis->modes_per_axis();
    if (cfg.init_mode.size() != m.size())
      throw std::invalid_argument("init.mode: expected one entry per axis");
    Index idx = 0;
    for (size_t ax = 0; ax < m.size(); ++ax) {
      if (cfg.init_mode[ax] < 1 || cfg.init_mode[ax] > m[ax])
        throw std::invalid_argument("init.mode: index out of range on axis " +
                                    std::to_string(ax + 1));
      idx = idx * m[ax] + (cfg.init_mode[ax] - 1);
    }
    w0.coef[idx] = cfg.amplitude;
    w1.coef[idx] = cfg.zt_amplitude;
    th.coef[idx] = cfg.theta_amplitude;
  } else if (cfg.init_kind == "multi_mode") {
    const Index n = std::min<Index>(cfg.init_count, lam.size());
    for (Index k = 0; k < n; ++k) {
      const double scale = (lam[0] * lam[0]) / (lam[k] * lam[k]);
      w0.coef[k] = cfg.amplitude * scale;
      w1.coef[k] = cfg.zt_amplitude * scale;
      th.coef[k] = cfg.theta_amplitude * scale;
    }
  } else if (cfg.init_kind == "gaussian") {
    const int dim = basis->dim();
    const std::vector<int>& m = basis->modes_per_axis();
    double min_len = cfg.lengths[0];
    for (double l : cfg.lengths) min_len = std::min(min_len, l);
    const double width = cfg.init_width > 0.0 ? cfg.init_width : 0.1 * min_len;
    std::vector<Index> n_ax(dim);
    for (int ax = 0; ax < dim; ++ax) n_ax[ax] = Index(basis->dealias_factor()) * m[ax];
    GridField g{basis, ArrayXd(basis->num_grid())};
    for (Index flat = 0; flat < basis->num_grid(); ++flat) {
      Index rem = flat;
      double r2 = 0.0;
      for (int ax = dim - 1; ax >= 0; --ax) {
        const Index j = rem % n_ax[ax];
        rem /= n_ax[ax];
        const double x = double(j + 1) * cfg.lengths[ax] / double(n_ax[ax] + 1);
        const double d = x - 0.5 * cfg.lengths[ax];
        r2 += d * d;
      }
      g.val[flat] = std::exp(-r2 / (2.0 * width * width));
    }
    const SpectralField prof = to_spectral(g);
    w0.coef = cfg.amplitude * prof.coef;
    w1.coef = cfg.zt_amplitude * prof.coef;
    th.coef = cfg.theta_amplitude * prof.coef;
  } else {  // random
    std::mt19937_64 rng(cfg.seed);
    auto draw = [&rng]() {
      return (double(rng() >> 11) * (1.0 / 9007199254740992.0)) * 2.0 - 1.0;
    };
    auto fill = [&](double amp) {
      SpectralField f = zero_field(basis);
      for (Index k = 0; k < lam.size(); ++k) f.coef[k] = draw() / (lam[k] * lam[k]);
      const double sup = to_grid(f).val.abs().maxCoeff();
      f.coef *= (sup > 0.0) ? amp / sup : 0.0;
      return f;
    };
    w0 = fill(cfg.amplitude);
    w1 = fill(cfg.zt_amplitude);
    th = fill(cfg.theta_amplitude);
  }

  if (cfg.init_form == "w") return reduce_order(w0, w1, th);
  return PlateState{std::move(w0), std::move(w1), std::move(th)};
}

void write_csv(const std::string& path, const Trajectory& traj) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fputs("t,E1,E1_beta,E2,E3,X,min_a,boost_ratio,identity_residual_cum\n", f);
  char buf[512];
  for (const EnergyReport& r : traj.diagnostics) {
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.e1,
                  r.e1_beta, r.e2, r.e3, r.x, r.min_a, r.boost_ratio, r.identity_residual);
    std::fputs(buf, f);
  }
  std::fclose(f);
}

int exit_code(HaltReason r) {
  switch (r) {
    case HaltReason::completed: return 0;
    case HaltReason::blowup: return 2;
    case HaltReason::hyperbolicity_loss: return 2;
    case HaltReason::solver_failure: return 1;
  }
  return 1;
}

namespace {

nlohmann::json report_row(const EnergyReport& r) {
  nlohmann::json j;
  j["t"] = r.t;
  j["E1"] = r.e1;
  j["E1_beta"] = r.e1_beta;
  j["E2"] = r.e2;
  j["E3"] = r.e3;
  j["X"] = r.x;
  j["min_a"] = r.min_a;
  j["boost_ratio"] = r.boost_ratio;
  j["cum_dissipation"] = r.cum_dissipation;
  j["cum_work"] = r.cum_work;
  j["identity_residual"] = r.identity_residual;
  return j;
}

nlohmann::json base_report(const RunConfig& cfg, const Trajectory& traj) {
  nlohmann::json j;
  j["scenario"] = cfg.scenario;
  j["halt_reason"] = to_string(traj.halt_reason);
  j["samples"] = traj.times.size();
  j["t_final"] = traj.times.back();
  j["csv"] = "series.csv";
  j["config"] = cfg.to_map();
  j["final"] = report_row(traj.diagnostics.back());
  return j;
}

void series_of(const Trajectory& traj, std::vector<double>& ts, std::vector<double>& xs) {
  ts.clear();
  xs.clear();
  for (const EnergyReport& r : traj.diagnostics) {
    ts.push_back(r.t);
    xs.push_back(r.x);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
}

}  // namespace

ScenarioResult run_scenario(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const BasisPtr basis = config_basis(cfg);
  const PlateState init = initial_state(cfg, basis);

  RunConfig c = cfg;
  c.control.keep_states = (cfg.scenario == "linear_analytic");

  ScenarioResult res;
  if (cfg.scenario == "kato_vs_direct") {
    RunConfig ck = c;
    ck.scheme.kind = SchemeKind::kato;
    RunConfig cd = c;
    if (cd.scheme.kind == SchemeKind::kato) cd.scheme.kind = SchemeKind::etd2;
    res.traj = run(init, ck.params, ck.scheme, ck.control);
    res.secondary = run(init, cd.params, cd.scheme, cd.control);
  } else {
    if (cfg.scenario == "linear_analytic" &&
        !(cfg.params.law.kind == StiffnessLaw::Kind::cubic && cfg.params.omega == 0.0))
      throw std::invalid_argument("linear_analytic requires the cubic law with omega = 0");
    res.traj = run(init, c.params, c.scheme, c.control);
  }
  res.halt = res.traj.halt_reason;

  nlohmann::json report = base_report(cfg, res.traj);
  std::vector<double> ts, xs;
  series_of(res.traj, ts, xs);

  if (cfg.scenario == "small_data_decay") {
    nlohmann::json d;
    if (res.traj.halt_reason == HaltReason::completed && xs.size() >= 3) {
      const DecayFit fit = fit_decay(ts, xs);
      d["k"] = fit.k;
      d["C"] = fit.C;
      d["r2"] = fit.r2;
      double xmax = 0.0;
      for (double v : xs) xmax = std::max(xmax, v);
      d["overshoot"] = xs.front() > 0.0 ? xmax / xs.front() : 0.0;
    }
    report["decay"] = d;
  } else if (cfg.scenario == "energy_identity") {
    const EnergyReport& fin = res.traj.diagnostics.back();
    report["identity"] = {{"residual_final", fin.identity_residual},
                          {"cum_dissipation", fin.cum_dissipation},
                          {"cum_work", fin.cum_work}};
  } else if (cfg.scenario == "kato_vs_direct") {
    std::vector<double> td, xd;
    series_of(res.secondary, td, xd);
    const size_t n = std::min(xs.size(), xd.size());
    double xref = 1e-300, diff = 0.0;
    for (size_t i = 0; i < n; ++i) {
      xref = std::max(xref, std::abs(xd[i]));
      diff = std::max(diff, std::abs(xs[i] - xd[i]));
    }
    report["kato"] = {{"x_max_rel_diff", diff / xref},
                      {"windows", res.traj.kato_windows},
                      {"iterations", res.traj.kato_iterations},
                      {"rho_history", res.traj.kato_rho},
                      {"direct_scheme",
                       scheme_name(cfg.scheme.kind == SchemeKind::kato ? SchemeKind::etd2
                                                                       : cfg.scheme.kind)},
                      {"direct_halt", to_string(res.secondary.halt_reason)},
                      {"direct_csv", "series_direct.csv"}};
  } else if (cfg.scenario == "linear_analytic") {
    const PlateState& s0 = res.traj.states.front();
    const PlateState& sT = res.traj.states.back();
    const double t_final = res.traj.times.back();
    const ArrayXd& lam = basis->eigenvalues();
    double scale = 0.0;
    for (Index k = 0; k < lam.size(); ++k)
      scale = std::max({scale, std::abs(s0.z.coef[k]), std::abs(s0.zt.coef[k]),
                        std::abs(s0.theta.coef[k])});
    double sup = 0.0, abscissa = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < lam.size(); ++k) {
      const Eigen::Vector3d v0(s0.z.coef[k], s0.zt.coef[k], s0.theta.coef[k]);
      const Eigen::Matrix3d prop = (t_final * linear_block(lam[k], cfg.params)).exp();
      const Eigen::Vector3d ref = prop * v0;
      sup = std::max({sup, std::abs(sT.z.coef[k] - ref[0]),
                      std::abs(sT.zt.coef[k] - ref[1]),
                      std::abs(sT.theta.coef[k] - ref[2])});
      if (v0.lpNorm<Eigen::Infinity>() > 1e-12 * scale) {
        const Eigen::Matrix3d m = linear_block(lam[k], cfg.params);
        const Eigen::Vector3cd ev = Eigen::EigenSolver<Eigen::Matrix3d>(m).eigenvalues();
        for (int i = 0; i < 3; ++i) abscissa = std::max(abscissa, ev[i].real());
      }
    }
    nlohmann::json lin;
    lin["sup_error"] = sup;
    if (std::isfinite(abscissa)) {
      lin["abscissa"] = abscissa;
      if (res.traj.halt_reason == HaltReason::completed && xs.size() >= 3) {
        const DecayFit fit = fit_decay(ts, xs);
        lin["k_fit"] = fit.k;
        lin["r2"] = fit.r2;
        lin["rate_ratio"] = fit.k / (2.0 * std::abs(abscissa));
      }
    }
    report["linear"] = lin;
  } else if (cfg.scenario == "boost_check") {
    double sup = 0.0;
    for (const EnergyReport& r : res.traj.diagnostics) sup = std::max(sup, r.boost_ratio);
    report["boost"] = {{"sup", sup},
                       {"final", res.traj.diagnostics.back().boost_ratio}};
  } else if (cfg.scenario == "barrier_probe") {
    BarrierConstants bc = cfg.barrier_c;
    nlohmann::json b;
    if (cfg.barrier_fit) {
      const AprioriFit af = apriori_constants(ts, xs);
      bc = af.c;
      b["slack"] = af.slack;
    }
    b["C1"] = bc.C1;
    b["C2"] = bc.C2;
    b["C3"] = bc.C3;
    b["C4"] = bc.C4;
    const BarrierReport br = barrier_roots(bc, xs.front());
    b["eta_root"] = br.eta_root;
    b["xi_root"] = br.xi_root;
    b["eta_unbounded"] = br.eta_unbounded;
    b["xi_unbounded"] = br.xi_unbounded;
    b["k_argmax"] = br.k_argmax;
    b["k_max"] = br.k_max;
    b["delta1"] = br.delta1;
    b["delta2"] = br.delta2;
    b["bands_defined"] = br.bands_defined;
    b["admissible"] = br.admissible;
    const BarrierMargins bm = barrier_eval(ts, xs, bc);
    b["margin_worst"] = bm.worst;
    b["holds"] = bm.holds;
    report["barrier"] = b;
  } else if (cfg.scenario == "hyperbolicity_probe") {
    report["hyperbolicity"] = {
        {"halted", res.traj.halt_reason != HaltReason::completed},
        {"t_last", res.traj.times.back()},
        {"min_a_last", res.traj.diagnostics.back().min_a}};
  }

  write_csv((fs::path(out_dir) / "series.csv").string(), res.traj);
  if (cfg.scenario == "kato_vs_direct")
    write_csv((fs::path(out_dir) / "series_direct.csv").string(), res.secondary);
  write_text(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
  res.report = std::move(report);
  return res;
}

std::vector<LadderRung> residual_ladder(const RunConfig& cfg, int halvings) {
  if (halvings < 1) throw std::invalid_argument("halvings must be at least 1");
  const BasisPtr basis = config_basis(cfg);
  const PlateState init = initial_state(cfg, basis);
  RunConfig c = cfg;
  c.control.keep_states = false;
  c.control.sample_every = 1;
  std::vector<LadderRung> out;
  for (int i = 0; i < halvings; ++i) {
    c.scheme.dt = cfg.scheme.dt / double(1 << i);
    const Trajectory traj = run(init, c.params, c.scheme, c.control);
    out.push_back({c.scheme.dt, traj.diagnostics.back().identity_residual,
                   traj.halt_reason});
  }
  return out;
}

int ladder_command(const RunConfig& cfg, int halvings, const std::string& out_dir) {
  const std::vector<LadderRung> rungs = residual_ladder(cfg, halvings);
  fs::create_directories(out_dir);

  std::string csv = "dt,identity_residual,ratio\n";
  char buf[256];
  for (size_t i = 0; i < rungs.size(); ++i) {
    const double ratio =
        i > 0 ? rungs[i - 1].residual / rungs[i].residual
              : std::numeric_limits<double>::quiet_NaN();
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", rungs[i].dt, rungs[i].residual,
                  ratio);
    csv += buf;
  }
  write_text(fs::path(out_dir) / "ladder.csv", csv);

  nlohmann::json j;
  j["config"] = cfg.to_map();
  j["rungs"] = nlohmann::json::array();
  for (size_t i = 0; i < rungs.size(); ++i) {
    nlohmann::json r;
    r["dt"] = rungs[i].dt;
    r["identity_residual"] = rungs[i].residual;
    r["halt_reason"] = to_string(rungs[i].halt);
    if (i > 0) r["ratio"] = rungs[i - 1].residual / rungs[i].residual;
    j["rungs"].push_back(r);
  }
  write_text(fs::path(out_dir) / "ladder.json", j.dump(2) + "\n");

  int code = 0;
  for (const LadderRung& r : rungs) {
    if (r.halt == HaltReason::solver_failure) return 1;
    if (r.halt != HaltReason::completed) code = 2;
  }
  return code;
}

namespace {

struct Curve {
  int col;
  const char* name;
  const char* color;
};

std::string render_svg(const std::vector<std::array<double, 9>>& rows,
                       const std::string& title) {
  constexpr int W = 880, H = 540;
  constexpr double L = 75, R = 700, T = 40, B = 495;
  static constexpr Curve curves[] = {{2, "E1_beta", "#6a51a3"},
                                     {3, "E2", "#1f77b4"},
                                     {4, "E3", "#2ca02c"},
                                     {5, "X", "#d62728"}};
  const double floor_v = 1e-300;

  double tmin = rows.front()[0], tmax = rows.back()[0];
  if (!(tmax > tmin)) tmax = tmin + 1.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : rows)
    for (const Curve& c : curves) {
      const double v = std::log10(std::max(row[c.col], floor_v));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }

  auto xmap = [&](double t) { return L + (R - L) * (t - tmin) / (tmax - tmin); };
  auto ymap = [&](double v) {
    return B - (B - T) * (std::log10(std::max(v, floor_v)) - lo) / (hi - lo);
  };

  std::ostringstream s;
  char buf[256];
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << (L + R) / 2 << "\" y=\"22\" text-anchor=\"middle\" "
       "font-family=\"monospace\" font-size=\"14\" fill=\"#222\">"
    << title << "</text>\n";

  for (int i = 0; i <= 5; ++i) {
    const double t = tmin + (tmax - tmin) * i / 5.0;
    const double x = xmap(t);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#ddd\"/>\n",
                  x, T, x, B);
    s << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" "
                  "font-family=\"monospace\" font-size=\"11\" fill=\"#444\">%.3g</text>\n",
                  x, B + 16, t);
    s << buf;
    const double v = lo + (hi - lo) * i / 5.0;
    const double y = ymap(std::pow(10.0, v));
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#ddd\"/>\n",
                  L, y, R, y);
    s << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\" "
                  "font-family=\"monospace\" font-size=\"11\" fill=\"#444\">%.2g</text>\n",
                  L - 6, y + 4, std::pow(10.0, v));
    s << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" "
                "stroke=\"#222\"/>\n",
                L, T, R - L, B - T);
  s << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" "
                "font-family=\"monospace\" font-size=\"12\" fill=\"#222\">t</text>\n",
                (L + R) / 2, B + 32);
  s << buf;

  int ly = static_cast<int>(T) + 10;
  for (const Curve& c : curves) {
    s << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", xmap(row[0]), ymap(row[c.col]));
      s << buf;
    }
    s << "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"%s\" "
                  "stroke-width=\"3\"/>\n",
                  static_cast<int>(R) + 14, ly, static_cast<int>(R) + 40, ly, c.color);
    s << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"%d\" font-family=\"monospace\" font-size=\"12\" "
                  "fill=\"#222\">%s</text>\n",
                  static_cast<int>(R) + 46, ly + 4, c.name);
    s << buf;
    ly += 20;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

int plot_command(const std::string& record_path) {
  std::ifstream in(record_path);
  if (!in) throw std::invalid_argument("cannot read run record: " + record_path);
  nlohmann::json j;
  in >> j;
  const fs::path dir = fs::path(record_path).parent_path();
  const std::string csv_name = j.value("csv", std::string("series.csv"));
  const fs::path csv_path = dir / csv_name;

  std::ifstream c(csv_path);
  if (!c) throw std::invalid_argument("cannot read series: " + csv_path.string());
  std::string line;
  if (!std::getline(c, line)) throw std::runtime_error("empty series file");
  std::vector<std::array<double, 9>> rows;
  while (std::getline(c, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_list(line);
    if (cells.size() != 9) throw std::runtime_error("malformed series row: " + line);
    std::array<double, 9> row{};
    for (int i = 0; i < 9; ++i) row[i] = parse_double(cells[i], "series");
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("series file has no samples");

  const std::string title = j.value("scenario", std::string("run")) + "  (" +
                            j.value("halt_reason", std::string("?")) + ")";
  fs::path svg_path = csv_path;
  svg_path.replace_extension(".svg");
  write_text(svg_path, render_svg(rows, title));
  std::printf("wrote %s\n", svg_path.string().c_str());
  return 0;
}

}  // namespace platesim

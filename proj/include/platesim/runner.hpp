#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "platesim/timestepper.hpp"

namespace platesim {

// A run is configured by flat `key = value` lines ('#' starts a comment).
// Unknown keys are rejected. Command-line overrides use the same syntax and
// are applied after the file.
struct RunConfig {
  // small_data_decay | energy_identity | kato_vs_direct | linear_analytic |
  // boost_check | barrier_probe | hyperbolicity_probe
  std::string scenario = "small_data_decay";

  std::vector<double> lengths{1.0, 1.0};  // domain.lengths
  std::vector<int> modes{32, 32};         // domain.modes (single value broadcasts)
  int dealias = 2;                        // domain.dealias

  ModelParams params;   // model.alpha ... model.omega, model.law[.value/.zeta/.a]
  SchemeSpec scheme;    // scheme.kind, scheme.dt, kato.*
  RunControl control;   // run.t_end, run.sample_every, run.blowup_factor,
                        // run.hyperbolicity_floor

  std::string init_kind = "multi_mode";  // single_mode | multi_mode | gaussian | random
  std::string init_form = "w";           // w: data are deflections, z = A w; z: direct
  double amplitude = 1e-3;               // init.amplitude
  double zt_amplitude = 0.0;             // init.zt_amplitude
  double theta_amplitude = 0.0;          // init.theta_amplitude
  std::vector<int> init_mode{1, 1};      // init.mode, 1-based per axis
  int init_count = 3;                    // init.count (multi_mode)
  double init_width = 0.0;  // init.width (gaussian); 0 picks a tenth of the shortest edge
  std::uint64_t seed = 20240817;  // init.seed (random)

  bool barrier_fit = true;     // barrier.fit: fit the inequality constants from the run
  BarrierConstants barrier_c;  // barrier.C1 .. barrier.C4, used when the fit is off

  std::map<std::string, std::string> to_map() const;  // resolved view, echoed in reports
};

RunConfig config_from_map(const std::map<std::string, std::string>& kv);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});

BasisPtr config_basis(const RunConfig& cfg);
PlateState initial_state(const RunConfig& cfg, const BasisPtr& basis);

// One row per recorded sample, 17 significant digits, byte-stable across
// reruns of the same configuration.
void write_csv(const std::string& path, const Trajectory& traj);

struct ScenarioResult {
  Trajectory traj;       // the scenario's primary run
  Trajectory secondary;  // the direct comparison run of kato_vs_direct
  nlohmann::json report;
  HaltReason halt = HaltReason::completed;
};

// Runs the configured scenario and writes series.csv (series_direct.csv for
// the comparison scenario) and report.json into out_dir.
ScenarioResult run_scenario(const RunConfig& cfg, const std::string& out_dir);

struct LadderRung {
  double dt = 0.0;
  double residual = 0.0;
  HaltReason halt = HaltReason::completed;
};

// Reruns the configured problem with dt halved `halvings - 1` times and
// collects the final dissipation-identity residual of each run.
std::vector<LadderRung> residual_ladder(const RunConfig& cfg, int halvings);
int ladder_command(const RunConfig& cfg, int halvings, const std::string& out_dir);

// Renders series.svg next to a run record written by run_scenario.
int plot_command(const std::string& record_path);

// 0 completed, 2 halted by a monitor, 1 solver failure.
int exit_code(HaltReason r);

}  // namespace platesim

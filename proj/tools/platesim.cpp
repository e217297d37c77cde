#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "platesim/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pseudo-spectral simulator and energy analyzer for a quasilinear "
               "thermoelastic plate model"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::string record_path;
  int halvings = 4;

  CLI::App* cmd_run = app.add_subcommand("run", "run a configured scenario");
  cmd_run->add_option("--config", config_path, "configuration file")->required();
  cmd_run->add_option("--out", out_dir, "output directory (default: out)");
  cmd_run->add_option("--override", overrides,
                      "key=value settings applied after the config file");

  CLI::App* cmd_ladder =
      app.add_subcommand("ladder", "rerun with halved steps and tabulate the "
                                   "dissipation-identity residual");
  cmd_ladder->add_option("--config", config_path, "configuration file")->required();
  cmd_ladder->add_option("--halvings", halvings, "number of rungs (default: 4)");
  cmd_ladder->add_option("--out", out_dir, "output directory (default: out)");
  cmd_ladder->add_option("--override", overrides,
                         "key=value settings applied after the config file");

  CLI::App* cmd_plot = app.add_subcommand("plot", "render an energy plot from a run record");
  cmd_plot->add_option("--record", record_path, "report.json written by a run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (cmd_run->parsed()) {
      const platesim::RunConfig cfg = platesim::load_config(config_path, overrides);
      const platesim::ScenarioResult res = platesim::run_scenario(cfg, out_dir);
      std::printf("%s: %s after %zu samples (t = %.6g); series in %s\n",
                  cfg.scenario.c_str(), platesim::to_string(res.traj.halt_reason),
                  res.traj.times.size(), res.traj.times.back(), out_dir.c_str());
      return platesim::exit_code(res.halt);
    }
    if (cmd_ladder->parsed()) {
      const platesim::RunConfig cfg = platesim::load_config(config_path, overrides);
      const int rc = platesim::ladder_command(cfg, halvings, out_dir);
      std::printf("ladder with %d rungs written to %s\n", halvings, out_dir.c_str());
      return rc;
    }
    return platesim::plot_command(record_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

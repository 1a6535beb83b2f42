#include <iostream>

#include <CLI11.hpp>

#include "capmfg/commands.hpp"

int main(int argc, char** argv) {
  using namespace capmfg;
  CLI::App app{"Stochastic capacity design: mean-field game simulator and QP oracle"};
  app.set_version_flag("--version", "capmfg 0.1.0");

  RunConfig run;
  std::string mode_text;
  std::string mode_flag;
  const std::vector<std::string> mode_names{"simulate", "oracle", "pd-run", "consensus-analyze",
                                            "care-check"};
  app.add_option("command", mode_text, "simulate | oracle | pd-run | consensus-analyze | care-check")
      ->check(CLI::IsMember(mode_names));
  app.add_option("--mode", mode_flag, "same as the positional command")
      ->check(CLI::IsMember(mode_names));
  app.add_option("--config", run.config, "config file, or 'paper' for the bundled one")
      ->capture_default_str();
  app.add_option("--out", run.output_dir, "output directory")->capture_default_str();
  bool no_plot = false;
  app.add_flag("--no-plot", no_plot, "skip the SVG chart");

  auto opt = [&](const char* name, auto& target, const char* help) {
    using T = typename std::decay_t<decltype(target)>::value_type;
    app.add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
  };
  opt("--seed", run.seed, "RNG seed");
  opt("--agents", run.agents, "number of agents");
  opt("--steps", run.steps, "simulation steps (pd-run: step limit)");
  opt("--dt", run.dt, "time step");
  opt("--q", run.q_weight, "state penalty weight");
  opt("--r", run.r_weight, "control penalty weight");
  opt("--s", run.s_weight, "terminal penalty weight");
  opt("--workers", run.workers, "worker threads for the simulator");
  opt("--omega", run.omega, "demand vector, comma separated");
  opt("--u", run.u, "flows of a point to compare with the oracle");
  opt("--c", run.c, "capacities of a point to compare with the oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (!mode_text.empty() && !mode_flag.empty() && mode_text != mode_flag) {
    std::cerr << "error: [InvalidParams] command '" << mode_text << "' conflicts with --mode '"
              << mode_flag << "'\n";
    return kExitConfig;
  }
  const std::string chosen = mode_text.empty() ? mode_flag : mode_text;
  if (chosen.empty()) {
    std::cerr << "error: [InvalidParams] no command given\n" << app.help();
    return kExitConfig;
  }
  run.mode = *parse_mode(chosen);
  run.plot = !no_plot;
  return command_dispatch(run, std::cout, std::cerr);
}

#include "capmfg/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "capmfg/error.hpp"
#include "capmfg/export.hpp"

namespace capmfg {
namespace {

constexpr std::pair<const char*, Mode> kModes[] = {{"simulate", Mode::Simulate},
                                                   {"oracle", Mode::Oracle},
                                                   {"pd-run", Mode::PdRun},
                                                   {"consensus-analyze", Mode::ConsensusAnalyze},
                                                   {"care-check", Mode::CareCheck}};

std::string_view active_name(ActiveKind kind) {
  switch (kind) {
    case ActiveKind::Interior: return "interior";
    case ActiveKind::CapacityBinding: return "u=c";
    case ActiveKind::FlowZero: return "u=0";
    case ActiveKind::BothZero: return "u=c=0";
  }
  return "?";
}

std::string join(const Vector& v, const char* spec = "{:.10g}") {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt::format(fmt::runtime(spec), v[i]);
  }
  return s;
}

std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::IoError,
                fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  }
  return dir;
}

Vector resolve_omega(const ProjectConfig& cfg, const RunConfig& run) {
  if (!run.omega) return cfg.omega();
  Vector omega = parse_number_list(*run.omega, "--omega");
  validate_demand(cfg.net, omega);
  return omega;
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

int run_simulate(const ProjectConfig& cfg, const RunConfig& run, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const SimulationResult result = run_simulation(cfg.net, cfg.costs, cfg.sim);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto dir = prepare_dir(run.output_dir);
  const PlotFiles files = emit_plots(result.log, dir, run.plot);
  write_metadata(result, to_yaml(cfg), dir / "metadata.txt");

  const auto& log = result.log;
  fmt::print(out, "agents {}  steps {}  dt {}  seed {}\n", cfg.sim.agents, cfg.sim.steps,
             cfg.sim.dt, cfg.sim.seed);
  fmt::print(out, "riccati residual {:.3e}  closed-loop abscissa {:.6f}\n",
             result.care.standard_residual, result.care.closed_loop_abscissa);
  fmt::print(out, "capacity spread: initial {:.6f}  final {:.6f}  ratio {:.6f}\n",
             log.spread.front().max, log.spread.back().max,
             log.spread.back().max / log.spread.front().max);
  if (auto t = time_to_fraction(log, 0.2)) {
    fmt::print(out, "time to 20% spread {:.4g}\n", *t);
  } else {
    fmt::print(out, "time to 20% spread: not reached\n");
  }
  const Vector final_c = log.final_means.middleRows(log.layout.c_offset(), log.layout.m)
                             .rowwise()
                             .mean();
  fmt::print(out, "mean final capacity {}\n", join(final_c, "{:.6f}"));
  fmt::print(out, "wrote {}, {}", files.trajectory_csv.string(), files.summary_csv.string());
  if (!files.chart_svg.empty()) fmt::print(out, ", {}", files.chart_svg.string());
  fmt::print(out, ", {} ({:.2f} s)\n", (dir / "metadata.txt").string(), secs);
  return kExitOk;
}

int run_oracle(const ProjectConfig& cfg, const RunConfig& run, std::ostream& out) {
  const Vector omega = resolve_omega(cfg, run);
  const QpSolution sol = solve_deterministic_qp(cfg.net, cfg.costs, omega);
  const KktResidual kkt = kkt_residual(cfg.net, cfg.costs, sol.state(), omega);

  std::ostringstream table;
  fmt::print(table, "edge,label,u,c,mu,active\n");
  for (Index e = 0; e < cfg.net.m; ++e) {
    fmt::print(table, "{},{},{:.12g},{:.12g},{:.12g},{}\n", e + 1,
               cfg.net.edge_labels[static_cast<std::size_t>(e)], sol.u[e], sol.c[e], sol.mu[e],
               active_name(sol.active_set[static_cast<std::size_t>(e)]));
  }
  out << table.str();
  fmt::print(out, "lambda {}\n", join(sol.lambda));
  fmt::print(out, "objective {:.12g}\n", sol.objective);
  fmt::print(out, "kkt residual {:.3e}\n", kkt.max_abs());
  fmt::print(out, "patterns examined {}\n", sol.patterns_examined);

  // Gap against a supplied point, else against the primal-dual fixed point.
  Vector u, c;
  std::string label;
  if (run.u || run.c) {
    if (!run.u || !run.c) throw Error(ErrorKind::InvalidParams, "--u and --c must be given together");
    u = parse_number_list(*run.u, "--u");
    c = parse_number_list(*run.c, "--c");
    if (u.size() != cfg.net.m || c.size() != cfg.net.m) {
      throw Error(ErrorKind::DimensionMismatch, fmt::format("--u/--c need {} entries", cfg.net.m));
    }
    label = "supplied point";
  } else {
    const auto report = pd_run(cfg.net, cfg.costs, omega, StackedState::zeros(cfg.net.m, cfg.net.n),
                               cfg.pd);
    u = report.run.final_state.u;
    c = report.run.final_state.c;
    label = fmt::format("primal-dual point after {} steps", report.run.steps);
  }
  const double gap = suboptimality_gap(cfg.net, cfg.costs, omega, u, c, sol);
  fmt::print(out, "suboptimality gap ({}) {:.6e}\n", label, gap);

  const auto dir = prepare_dir(run.output_dir);
  write_text_file(dir / "oracle.csv", table.str());
  return kExitOk;
}

int run_pd(const ProjectConfig& cfg, const RunConfig& run, std::ostream& out) {
  const Vector omega = resolve_omega(cfg, run);
  PdRunOptions opts = cfg.pd;
  if (run.dt) opts.dt = *run.dt;
  if (run.steps) opts.max_steps = *run.steps;
  const auto report =
      pd_run(cfg.net, cfg.costs, omega, StackedState::zeros(cfg.net.m, cfg.net.n), opts);
  const auto& x = report.run.final_state;
  fmt::print(out, "steps {}  converged {}  final increment {:.3e}\n", report.run.steps,
             report.run.converged ? "yes" : "no", report.run.final_increment);
  fmt::print(out, "u {}\nc {}\nlambda {}\nmu {}\n", join(x.u), join(x.c), join(x.lambda),
             join(x.mu));
  fmt::print(out, "kkt residual {:.3e}\n", report.kkt.max_abs());
  const QpSolution sol = solve_deterministic_qp(cfg.net, cfg.costs, omega);
  fmt::print(out, "distance to oracle (u, c) {:.3e}\n",
             std::max(max_abs(x.u - sol.u), max_abs(x.c - sol.c)));

  std::ostringstream csv;
  fmt::print(csv, "block,index,value\n");
  auto dump = [&](const char* name, const Vector& v) {
    for (Index i = 0; i < v.size(); ++i) fmt::print(csv, "{},{},{:.17g}\n", name, i + 1, v[i]);
  };
  dump("u", x.u);
  dump("c", x.c);
  dump("lambda", x.lambda);
  dump("mu", x.mu);
  write_text_file(prepare_dir(run.output_dir) / "pd_run.csv", csv.str());
  if (!report.run.converged) {
    throw Error(ErrorKind::MaxStepsExceeded,
                fmt::format("no fixed point within {} steps", report.run.steps));
  }
  return kExitOk;
}

int run_consensus(const ProjectConfig& cfg, const RunConfig& run, std::ostream& out) {
  const SystemMatrices sys = assemble_system(cfg.net, cfg.costs, cfg.omega());
  const ControlMatrix ctrl = make_control_matrix(sys.layout, cfg.sim.control_mode);
  const MfgPenalties pen = build_penalties(sys.layout, cfg.sim.q_weight, cfg.sim.r_weight,
                                           cfg.sim.s_weight, cfg.sim.control_mode);
  const StationarySolver solver(sys, ctrl, pen, cfg.sim.care);
  const MacroTopology topo = build_topology(cfg.sim);

  ConsensusOptions opts;
  opts.form = cfg.consensus_form;
  opts.fold_rho = cfg.consensus_fold_rho;
  if (opts.form == ConsensusForm::IsolatedCapacity) {
    const QpSolution sol = solve_deterministic_qp(cfg.net, cfg.costs, cfg.omega());
    opts.mu_freeze = sol.mu;
    opts.rho_freeze = sol.c;
  }
  const ConsensusSystem cs = build_consensus_system(topo, sys, ctrl, pen, solver, opts);
  const ConvergenceReport rep = verify_convergence(cs);
  const EquilibriumResult eq = consensus_equilibrium(cs);

  const Index d = cs.d;
  Matrix blocks = Eigen::Map<const Matrix>(eq.state.data(), d, static_cast<Index>(cs.p));
  const Vector first = blocks.col(0);
  double disagreement = 0.0;
  for (Index k = 1; k < blocks.cols(); ++k) {
    disagreement = std::max(disagreement, max_abs(blocks.col(k) - first));
  }

  std::ostringstream report;
  fmt::print(report, "form,{}\n", to_string(cs.form));
  fmt::print(report, "agents,{}\n", cs.p);
  fmt::print(report, "block_dim,{}\n", d);
  fmt::print(report, "hurwitz,{}\n", rep.hurwitz ? "true" : "false");
  fmt::print(report, "abscissa,{:.17g}\n", rep.abscissa);
  fmt::print(report, "predicted_rate,{:.17g}\n", rep.predicted_rate);
  fmt::print(report, "time_constant,{:.17g}\n", rep.time_constant);
  fmt::print(report, "equilibrium_residual,{:.6e}\n", eq.residual);
  fmt::print(report, "equilibrium_disagreement,{:.6e}\n", disagreement);
  fmt::print(report, "equilibrium_block,{}\n", join(first, "{:.12g}"));
  out << report.str();
  write_text_file(prepare_dir(run.output_dir) / "consensus.csv", report.str());
  return kExitOk;
}

int run_care(const ProjectConfig& cfg, const RunConfig& run, std::ostream& out) {
  const SystemMatrices sys = assemble_system(cfg.net, cfg.costs, cfg.omega());
  const ControlMatrix ctrl = make_control_matrix(sys.layout, cfg.sim.control_mode);
  const MfgPenalties pen = build_penalties(sys.layout, cfg.sim.q_weight, cfg.sim.r_weight,
                                           cfg.sim.s_weight, cfg.sim.control_mode);
  const auto start = std::chrono::steady_clock::now();
  const auto sol = numerics::solve_care(sys.A, ctrl.B, pen.Q, pen.R, cfg.sim.care);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto open_loop = numerics::is_hurwitz(sys.A);

  std::ostringstream report;
  fmt::print(report, "dimension {}\n", sys.layout.dim());
  fmt::print(report, "inputs {}\n", ctrl.inputs());
  fmt::print(report, "method {}\n", sol.method_used == numerics::CareMethod::HamiltonianEigen
                                        ? "hamiltonian"
                                        : "newton");
  fmt::print(report, "newton iterations {}\n", sol.newton_iterations);
  fmt::print(report, "residual {:.3e}\n", sol.standard_residual);
  fmt::print(report, "residual (one-sided form) {:.3e}\n", sol.one_sided_residual);
  fmt::print(report, "open-loop abscissa {:.6f}\n", open_loop.abscissa);
  fmt::print(report, "closed-loop abscissa {:.6f}\n", sol.closed_loop_abscissa);
  fmt::print(report, "solve time {:.4f} s\n", secs);
  out << report.str();
  write_text_file(prepare_dir(run.output_dir) / "care.txt", report.str());
  return kExitOk;
}

}  // namespace

std::optional<Mode> parse_mode(const std::string& text) {
  for (const auto& [name, mode] : kModes) {
    if (text == name) return mode;
  }
  return std::nullopt;
}

std::string_view to_string(Mode mode) {
  for (const auto& [name, m] : kModes) {
    if (m == mode) return name;
  }
  return "?";
}

Vector parse_number_list(const std::string& text, const std::string& field) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size() || !std::isfinite(v)) {
      throw Error(ErrorKind::ParseError, fmt::format("{}: '{}' is not a number", field, item));
    }
    values.push_back(v);
  }
  if (values.empty()) throw Error(ErrorKind::ParseError, fmt::format("{}: empty list", field));
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

void apply_overrides(ProjectConfig& cfg, const RunConfig& run) {
  auto& sim = cfg.sim;
  if (run.seed) sim.seed = *run.seed;
  if (run.agents) sim.agents = *run.agents;
  if (run.steps) sim.steps = *run.steps;
  if (run.dt) sim.dt = *run.dt;
  if (run.q_weight) sim.q_weight = *run.q_weight;
  if (run.r_weight) sim.r_weight = *run.r_weight;
  if (run.s_weight) sim.s_weight = *run.s_weight;
  if (run.workers) sim.workers = *run.workers;
  validate_sim_config(cfg.net, sim);
}

int command_dispatch(const RunConfig& run, std::ostream& out, std::ostream& err) {
  try {
    ProjectConfig cfg = load_config(run.config);
    apply_overrides(cfg, run);
    switch (run.mode) {
      case Mode::Simulate: return run_simulate(cfg, run, out);
      case Mode::Oracle: return run_oracle(cfg, run, out);
      case Mode::PdRun: return run_pd(cfg, run, out);
      case Mode::ConsensusAnalyze: return run_consensus(cfg, run, out);
      case Mode::CareCheck: return run_care(cfg, run, out);
    }
    throw Error(ErrorKind::InvalidParams, "unknown mode");
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    switch (e.category()) {
      case ErrorCategory::Config: return kExitConfig;
      case ErrorCategory::Numerical: return kExitNumerical;
      case ErrorCategory::Io: return kExitIo;
    }
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(err, "error: [IoError] {}\n", e.what());
    return kExitIo;
  }
}

}  // namespace capmfg

#include "capmfg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "capmfg/error.hpp"

namespace capmfg {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kInitPurpose = 1;
constexpr std::uint64_t kDemandPurpose = 2;

// Runs body(begin, end) over contiguous chunks and rethrows the first failure
// in chunk order.
template <class Body>
void parallel_chunks(std::size_t count, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    threads.emplace_back([&, w, begin, end] {
      try {
        if (begin < end) body(begin, end);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace

void validate_sim_config(const MicroNetwork& net, const SimConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidParams, msg); };
  if (cfg.agents < 2) fail("agents must be at least 2");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) fail("dt must be positive");
  if (!(cfg.init_std >= 0.0) || !std::isfinite(cfg.init_mean)) fail("invalid initial distribution");
  if (!(cfg.q_weight >= 0.0) || !(cfg.s_weight >= 0.0) || !(cfg.r_weight > 0.0)) {
    fail("penalty weights need q >= 0, s >= 0, r > 0");
  }
  if (cfg.samples_per_population < 1) fail("samples_per_population must be at least 1");
  if (cfg.demand_mean.size() != net.n || cfg.demand_std.size() != net.n) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("demand vectors need {} entries", net.n));
  }
  for (Index i = 0; i < net.n; ++i) {
    if (!(cfg.demand_std[i] >= 0.0)) fail(fmt::format("negative demand std at node {}", i));
  }
  validate_demand(net, cfg.demand_mean);
  validate_demand(net, cfg.demand_std);
  if (cfg.topology.kind == TopologyKind::ScaleFree &&
      (cfg.topology.attach < 1 || cfg.agents < cfg.topology.attach + 1)) {
    fail("scale-free attachment needs 1 <= attach < agents");
  }
}

std::mt19937_64 agent_stream(std::uint64_t seed, std::size_t population, std::size_t sample,
                             std::uint64_t step, std::uint64_t purpose) {
  std::uint64_t state = seed;
  std::uint64_t key = splitmix64(state);
  for (std::uint64_t part : {static_cast<std::uint64_t>(population),
                             static_cast<std::uint64_t>(sample), step, purpose}) {
    state = key ^ part;
    key = splitmix64(state);
  }
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  return std::mt19937_64(seq);
}

void AgentPopulation::refresh_means() {
  means.resize(layout.dim(), static_cast<Index>(populations));
  const double inv = 1.0 / static_cast<double>(samples);
  for (std::size_t k = 0; k < populations; ++k) {
    Vector acc = states.col(column(k, 0));
    for (std::size_t s = 1; s < samples; ++s) acc += states.col(column(k, s));
    means.col(static_cast<Index>(k)) = acc * inv;
  }
}

AgentPopulation init_population(const SimConfig& cfg, const StateLayout& layout) {
  AgentPopulation pop;
  pop.layout = layout;
  pop.populations = cfg.agents;
  pop.samples = cfg.samples_per_population;
  pop.states.resize(layout.dim(), static_cast<Index>(cfg.agents * cfg.samples_per_population));
  for (std::size_t k = 0; k < cfg.agents; ++k) {
    for (std::size_t s = 0; s < pop.samples; ++s) {
      auto rng = agent_stream(cfg.seed, k, s, 0, kInitPurpose);
      std::normal_distribution<double> dist(cfg.init_mean, cfg.init_std);
      auto col = pop.states.col(pop.column(k, s));
      for (Index i = 0; i < layout.dim(); ++i) {
        col[i] = cfg.init_std > 0.0 ? dist(rng) : cfg.init_mean;
      }
    }
  }
  pop.refresh_means();
  return pop;
}

Vector sample_demand(const MicroNetwork& net, const SimConfig& cfg, std::mt19937_64& rng) {
  Vector omega = Vector::Zero(net.n);
  for (Index node : net.sink_nodes) {
    const double sd = cfg.demand_std[node];
    if (sd > 0.0) {
      std::normal_distribution<double> dist(cfg.demand_mean[node], sd);
      omega[node] = dist(rng);
    } else {
      omega[node] = cfg.demand_mean[node];
    }
  }
  return omega;
}

SpreadMetric spread_metric(const Matrix& capacities) {
  SpreadMetric out;
  const Index m = capacities.rows();
  const Index p = capacities.cols();
  out.per_edge = Vector::Zero(m);
  if (p == 0 || m == 0) return out;
  for (Index e = 0; e < m; ++e) {
    const double mean = capacities.row(e).mean();
    out.per_edge[e] = std::sqrt((capacities.row(e).array() - mean).square().sum() /
                                static_cast<double>(p));
  }
  out.max = out.per_edge.maxCoeff();
  out.mean = out.per_edge.mean();
  return out;
}

void step_population(AgentPopulation& pop, const SimContext& ctx, std::size_t step,
                     StepDraws* draws) {
  const auto& L = pop.layout;
  const auto& sys = ctx.sys;
  const auto& cfg = ctx.cfg;
  const Matrix rho_all = aggregate_rho(ctx.topo, pop.means);
  const Matrix rinv_bt = ctx.pen.R.ldlt().solve(ctx.ctrl.B.transpose());
  const Matrix feedback = rinv_bt * ctx.solver.phi();
  const auto& sinks = ctx.net.sink_nodes;

  if (draws) draws->demand = Matrix::Zero(static_cast<Index>(sinks.size()),
                                          static_cast<Index>(pop.populations));

  parallel_chunks(pop.populations, cfg.workers, [&](std::size_t begin, std::size_t end) {
    Vector offset = sys.C;
    for (std::size_t k = begin; k < end; ++k) {
      const Vector rho = rho_all.col(static_cast<Index>(k));
      for (std::size_t s = 0; s < pop.samples; ++s) {
        auto rng = agent_stream(cfg.seed, k, s, step + 1, kDemandPurpose);
        const Vector omega = sample_demand(ctx.net, cfg, rng);
        if (draws) {
          for (std::size_t j = 0; j < sinks.size(); ++j) {
            draws->demand(static_cast<Index>(j), static_cast<Index>(k)) +=
                omega[sinks[j]] / static_cast<double>(pop.samples);
          }
        }
        sys.write_demand(offset, omega);
        Vector h;
        try {
          h = ctx.solver.solve_h(rho, offset);
        } catch (const Error& e) {
          throw Error(e.kind(), fmt::format("agent {}: {}", k, e.what()));
        }
        auto x = pop.states.col(pop.column(k, s));
        const Vector v = -(feedback * x + rinv_bt * h);
        Vector next = x + cfg.dt * (sys.A * x + ctx.ctrl.B * v + offset);
        if (cfg.clamp_states) project_state(L, next);
        if (!all_finite(next) || next.cwiseAbs().maxCoeff() > cfg.divergence_bound) {
          throw Error(ErrorKind::Diverged,
                      fmt::format("agent {} left the bound at step {}", k, step + 1));
        }
        x = next;
      }
    }
  });
  pop.refresh_means();
}

MacroTopology build_topology(const SimConfig& cfg) {
  switch (cfg.topology.kind) {
    case TopologyKind::ScaleFree:
      return generate_scale_free(cfg.agents, cfg.topology.attach,
                                 cfg.topology.seed.value_or(cfg.seed));
    case TopologyKind::Ring:
      return make_ring(cfg.agents);
    case TopologyKind::Complete:
      return make_complete(cfg.agents);
    case TopologyKind::Star:
      return make_star(cfg.agents);
    case TopologyKind::EdgeList:
      return read_edge_list(cfg.topology.edge_list_path, cfg.agents);
  }
  throw Error(ErrorKind::InvalidParams, "unknown topology kind");
}

SimulationResult run_simulation(const MicroNetwork& net, const CostParams& costs,
                                const SimConfig& cfg) {
  validate_sim_config(net, cfg);
  return run_simulation(net, costs, cfg, build_topology(cfg));
}

SimulationResult run_simulation(const MicroNetwork& net, const CostParams& costs,
                                const SimConfig& cfg, const MacroTopology& topo) {
  validate_sim_config(net, cfg);
  if (topo.size() != cfg.agents) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("topology has {} nodes, config asks for {}", topo.size(), cfg.agents));
  }
  const SystemMatrices sys = assemble_system(net, costs, cfg.demand_mean);
  const ControlMatrix ctrl = make_control_matrix(sys.layout, cfg.control_mode);
  const MfgPenalties pen =
      build_penalties(sys.layout, cfg.q_weight, cfg.r_weight, cfg.s_weight, cfg.control_mode);
  const StationarySolver solver(sys, ctrl, pen, cfg.care);

  SimulationResult result{{}, solver.care(), topo, cfg};
  TrajectoryLog& log = result.log;
  log.layout = sys.layout;
  log.agents = cfg.agents;
  log.sink_nodes = net.sink_nodes;
  log.clamped = cfg.clamp_states;

  AgentPopulation pop = init_population(cfg, sys.layout);
  const SimContext ctx{net, topo, sys, ctrl, pen, solver, cfg};
  const Index c0 = sys.layout.c_offset();
  const Index m = sys.layout.m;

  auto record = [&](std::size_t step) {
    log.times.push_back(static_cast<double>(step) * cfg.dt);
    Matrix caps = pop.means.middleRows(c0, m);
    log.spread.push_back(spread_metric(caps));
    log.capacities.push_back(std::move(caps));
    if (cfg.record_full_states) log.full_states.push_back(pop.means);
  };

  record(0);
  StepDraws draws;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    step_population(pop, ctx, step, &draws);
    log.demand.push_back(draws.demand);
    record(step + 1);
  }
  log.final_means = pop.means;
  return result;
}

std::optional<double> time_to_fraction(const TrajectoryLog& log, double fraction) {
  if (log.spread.empty()) return std::nullopt;
  const double target = fraction * log.spread.front().max;
  for (std::size_t i = 0; i < log.spread.size(); ++i) {
    if (log.spread[i].max <= target) return log.times[i];
  }
  return std::nullopt;
}

}  // namespace capmfg

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "capmfg/consensus.hpp"
#include "capmfg/macro_net.hpp"
#include "capmfg/mfg.hpp"

namespace capmfg {

enum class TopologyKind { ScaleFree, Ring, Complete, Star, EdgeList };

struct TopologyParams {
  TopologyKind kind = TopologyKind::ScaleFree;
  std::size_t attach = 2;
  std::optional<std::uint64_t> seed;  // defaults to the simulation seed
  std::string edge_list_path;
};

struct SimConfig {
  std::size_t agents = 1000;
  double dt = 0.1;
  std::size_t steps = 200;
  std::uint64_t seed = 7;
  double init_mean = 40.0;
  double init_std = 15.0;
  Vector demand_mean;  // n entries, zero off the sinks
  Vector demand_std;   // n entries, zero off the sinks
  double q_weight = 1.0;
  double r_weight = 1.0;
  double s_weight = 1.0;
  ControlMode control_mode = ControlMode::ScalarOnCapacity;
  bool clamp_states = false;
  std::size_t samples_per_population = 1;
  std::size_t workers = 1;
  bool record_full_states = false;
  double divergence_bound = 1e9;
  TopologyParams topology;
  numerics::CareConfig care;
};

void validate_sim_config(const MicroNetwork& net, const SimConfig& cfg);

/// Independent generator for one (population, sample, step, purpose) tuple,
/// so draws do not depend on how agents are scheduled.
std::mt19937_64 agent_stream(std::uint64_t seed, std::size_t population, std::size_t sample,
                             std::uint64_t step, std::uint64_t purpose);

struct AgentPopulation {
  StateLayout layout;
  std::size_t populations = 0;
  std::size_t samples = 1;
  Matrix states;  // one column per player, population-major
  Matrix means;   // one column per population, frozen during a step

  void refresh_means();
  Index column(std::size_t population, std::size_t sample) const {
    return static_cast<Index>(population * samples + sample);
  }
};

AgentPopulation init_population(const SimConfig& cfg, const StateLayout& layout);

/// omega ~ Normal(mean, std^2) on sinks, zero elsewhere.
Vector sample_demand(const MicroNetwork& net, const SimConfig& cfg, std::mt19937_64& rng);

struct SpreadMetric {
  Vector per_edge;  // population standard deviation across agents
  double max = 0.0;
  double mean = 0.0;
};

SpreadMetric spread_metric(const Matrix& capacities);

/// Everything a step needs that stays fixed over the run.
struct SimContext {
  const MicroNetwork& net;
  const MacroTopology& topo;
  const SystemMatrices& sys;  // C holds the mean-demand template
  const ControlMatrix& ctrl;
  const MfgPenalties& pen;
  const StationarySolver& solver;
  const SimConfig& cfg;
};

struct StepDraws {
  Matrix demand;  // sinks x populations, averaged over samples
};

/// Advances every player one Euler step against the frozen mean snapshot,
/// then refreshes the snapshot.
void step_population(AgentPopulation& pop, const SimContext& ctx, std::size_t step,
                     StepDraws* draws = nullptr);

struct TrajectoryLog {
  StateLayout layout;
  std::size_t agents = 0;
  std::vector<Index> sink_nodes;
  std::vector<double> times;             // steps + 1 entries
  std::vector<Matrix> capacities;        // m x agents per recorded step
  std::vector<Matrix> demand;            // sinks x agents, one per step after the first
  std::vector<SpreadMetric> spread;      // per recorded step
  std::vector<Matrix> full_states;       // optional, d x agents
  Matrix final_means;                    // d x agents
  bool clamped = false;

  std::size_t rows() const { return times.size(); }
};

struct SimulationResult {
  TrajectoryLog log;
  numerics::CareSolution care;
  MacroTopology topology;
  SimConfig config;
};

MacroTopology build_topology(const SimConfig& cfg);

SimulationResult run_simulation(const MicroNetwork& net, const CostParams& costs,
                                const SimConfig& cfg);
SimulationResult run_simulation(const MicroNetwork& net, const CostParams& costs,
                                const SimConfig& cfg, const MacroTopology& topo);

/// Time of the first step whose aggregate spread is <= fraction * initial spread.
std::optional<double> time_to_fraction(const TrajectoryLog& log, double fraction);

}  // namespace capmfg

#pragma once

#include <filesystem>
#include <string>

#include "capmfg/consensus.hpp"
#include "capmfg/dynamics.hpp"
#include "capmfg/micro.hpp"
#include "capmfg/sim.hpp"

namespace capmfg {

/// Everything a run needs: the physical network, its costs, the demand model
/// and the simulation, solver and topology settings.
struct ProjectConfig {
  MicroNetwork net;
  CostParams costs;
  SimConfig sim;  // also carries demand means/stds and penalty weights
  PdRunOptions pd;
  ConsensusForm consensus_form = ConsensusForm::FullStacked;
  bool consensus_fold_rho = true;

  const Vector& omega() const { return sim.demand_mean; }
};

/// YAML text to a validated configuration. `source` only labels diagnostics.
ProjectConfig parse_config_string(const std::string& text, const std::string& source = "<string>");
ProjectConfig parse_config(const std::filesystem::path& path);

/// "paper" resolves to the bundled configuration, anything else is a path.
ProjectConfig load_config(const std::string& name_or_path);
ProjectConfig bundled_config();
const char* bundled_config_yaml();

std::string to_yaml(const ProjectConfig& cfg);

bool operator==(const ProjectConfig& a, const ProjectConfig& b);

std::string_view to_string(TopologyKind kind);
std::string_view to_string(ControlMode mode);
std::string_view to_string(ConsensusForm form);

}  // namespace capmfg

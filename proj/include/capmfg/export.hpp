#pragma once

#include <filesystem>
#include <string>

#include "capmfg/sim.hpp"

namespace capmfg {

/// Long format: step,time,agent,edge,c_value.
void write_trajectory_csv(const TrajectoryLog& log, const std::filesystem::path& path);
/// step,time,spread_max,spread_mean.
void write_summary_csv(const TrajectoryLog& log, const std::filesystem::path& path);
/// Config echo, seeds, Riccati residuals and the clamping flag.
void write_metadata(const SimulationResult& result, const std::string& config_yaml,
                    const std::filesystem::path& path);

/// Capacity trajectories, one panel per edge, at most `max_agents` agents.
std::string render_capacity_svg(const TrajectoryLog& log, std::size_t max_agents = 200);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

struct PlotFiles {
  std::filesystem::path trajectory_csv;
  std::filesystem::path summary_csv;
  std::filesystem::path chart_svg;  // empty when plotting is off
};

/// Writes the CSVs and, when `plot` is set, the SVG chart into `dir`.
PlotFiles emit_plots(const TrajectoryLog& log, const std::filesystem::path& dir, bool plot = true);

}  // namespace capmfg

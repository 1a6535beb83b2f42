#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "capmfg/config.hpp"

namespace capmfg {

enum class Mode { Simulate, Oracle, PdRun, ConsensusAnalyze, CareCheck };

std::optional<Mode> parse_mode(const std::string& text);
std::string_view to_string(Mode mode);

struct RunConfig {
  Mode mode = Mode::Simulate;
  std::string config = "paper";  // "paper" or a path
  std::filesystem::path output_dir = "out";
  bool plot = true;

  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> agents;
  std::optional<std::size_t> steps;
  std::optional<double> dt;
  std::optional<double> q_weight;
  std::optional<double> r_weight;
  std::optional<double> s_weight;
  std::optional<std::size_t> workers;
  std::optional<std::string> omega;  // comma-separated, n entries
  std::optional<std::string> u;      // heuristic point for the oracle gap
  std::optional<std::string> c;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitIo = 4 };

/// Parses "a,b,c" into a vector; throws ParseError naming `field`.
Vector parse_number_list(const std::string& text, const std::string& field);

/// Applies the command-line overrides to a loaded configuration.
void apply_overrides(ProjectConfig& cfg, const RunConfig& run);

/// Runs one command. Errors are reported on `err` with their kind and mapped
/// to an exit code.
int command_dispatch(const RunConfig& run, std::ostream& out, std::ostream& err);

}  // namespace capmfg

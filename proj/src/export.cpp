#include "capmfg/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "capmfg/config.hpp"
#include "capmfg/error.hpp"

namespace capmfg {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

void require_rows(const TrajectoryLog& log) {
  if (log.rows() == 0 || log.capacities.size() != log.rows()) {
    throw Error(ErrorKind::InvalidParams, "trajectory log is empty");
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot write '{}'", path.string()));
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, fmt::format("write failed for '{}'", path.string()));
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  auto out = open_out(path);
  out << contents;
  finish(out, path);
}

void write_trajectory_csv(const TrajectoryLog& log, const std::filesystem::path& path) {
  require_rows(log);
  auto out = open_out(path);
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "step,time,agent,edge,c_value\n");
  for (std::size_t s = 0; s < log.rows(); ++s) {
    const Matrix& caps = log.capacities[s];
    for (Index k = 0; k < caps.cols(); ++k) {
      for (Index e = 0; e < caps.rows(); ++e) {
        fmt::format_to(std::back_inserter(buf), "{},{:.17g},{},{},{:.17g}\n", s, log.times[s], k,
                       e + 1, caps(e, k));
      }
    }
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  finish(out, path);
}

void write_summary_csv(const TrajectoryLog& log, const std::filesystem::path& path) {
  require_rows(log);
  auto out = open_out(path);
  out << "step,time,spread_max,spread_mean\n";
  for (std::size_t s = 0; s < log.rows(); ++s) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", s, log.times[s], log.spread[s].max,
                       log.spread[s].mean);
  }
  finish(out, path);
}

void write_metadata(const SimulationResult& result, const std::string& config_yaml,
                    const std::filesystem::path& path) {
  const auto& log = result.log;
  const auto& cfg = result.config;
  auto out = open_out(path);
  out << fmt::format("seed: {}\n", cfg.seed);
  out << fmt::format("topology_seed: {}\n", cfg.topology.seed.value_or(cfg.seed));
  out << fmt::format("topology: {} ({} agents, {} links)\n", to_string(cfg.topology.kind),
                     result.topology.size(), result.topology.edge_count());
  out << fmt::format("control_mode: {}\n", to_string(cfg.control_mode));
  out << fmt::format("state_clamping: {}\n", log.clamped ? "on" : "off");
  out << fmt::format("riccati_residual_standard: {:.6e}\n", result.care.standard_residual);
  out << fmt::format("riccati_residual_one_sided: {:.6e}\n", result.care.one_sided_residual);
  out << fmt::format("closed_loop_abscissa: {:.17g}\n", result.care.closed_loop_abscissa);
  out << fmt::format("steps: {}\n", log.rows() - 1);
  if (!log.spread.empty()) {
    out << fmt::format("spread_initial: {:.17g}\n", log.spread.front().max);
    out << fmt::format("spread_final: {:.17g}\n", log.spread.back().max);
  }
  out << "--- config ---\n" << config_yaml;
  finish(out, path);
}

std::string render_capacity_svg(const TrajectoryLog& log, std::size_t max_agents) {
  require_rows(log);
  const Index m = log.capacities.front().rows();
  const auto agents = static_cast<std::size_t>(log.capacities.front().cols());
  const std::size_t stride = std::max<std::size_t>(1, (agents + max_agents - 1) / max_agents);
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
  const int rows = static_cast<int>((m + cols - 1) / cols);
  constexpr double pw = 320, ph = 220, margin = 40;
  const double width = cols * pw, height = rows * ph + 30;
  const double t0 = log.times.front();
  const double t1 = std::max(log.times.back(), t0 + 1e-12);

  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out,
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
                 "viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\" font-size=\"11\">\n",
                 width, height, width, height);
  fmt::format_to(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  fmt::format_to(out,
                 "<text x=\"{:.1f}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">Capacity "
                 "per agent vs time ({} of {} agents)</text>\n",
                 width / 2, (agents + stride - 1) / stride, agents);

  for (Index e = 0; e < m; ++e) {
    const int r = static_cast<int>(e) / cols, c = static_cast<int>(e) % cols;
    const double x0 = c * pw + margin, y0 = r * ph + 30 + 10;
    const double w = pw - margin - 10, h = ph - margin - 10;
    double lo = log.capacities.front()(e, 0), hi = lo;
    for (const auto& caps : log.capacities) {
      for (std::size_t k = 0; k < agents; k += stride) {
        lo = std::min(lo, caps(e, static_cast<Index>(k)));
        hi = std::max(hi, caps(e, static_cast<Index>(k)));
      }
    }
    if (hi - lo < 1e-9) {
      lo -= 0.5;
      hi += 0.5;
    }
    fmt::format_to(out, "<g>\n<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
                        "fill=\"none\" stroke=\"#444\"/>\n",
                   x0, y0, w, h);
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">edge {}</text>\n",
                   x0 + w / 2, y0 - 3, e + 1);
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n",
                   x0 - 3, y0 + 10, hi);
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n",
                   x0 - 3, y0 + h, lo);
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">t = {:.3g}</text>\n",
                   x0 + w, y0 + h + 14, t1);
    const char* color = kPalette[static_cast<std::size_t>(e) % std::size(kPalette)];
    for (std::size_t k = 0; k < agents; k += stride) {
      fmt::format_to(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-opacity=\"0.35\" "
                          "stroke-width=\"0.6\" points=\"",
                     color);
      for (std::size_t s = 0; s < log.rows(); ++s) {
        const double px = x0 + w * (log.times[s] - t0) / (t1 - t0);
        const double py = y0 + h * (hi - log.capacities[s](e, static_cast<Index>(k))) / (hi - lo);
        fmt::format_to(out, "{}{:.2f},{:.2f}", s ? " " : "", px, py);
      }
      fmt::format_to(out, "\"/>\n");
    }
    fmt::format_to(out, "</g>\n");
  }
  fmt::format_to(out, "</svg>\n");
  return fmt::to_string(buf);
}

PlotFiles emit_plots(const TrajectoryLog& log, const std::filesystem::path& dir, bool plot) {
  require_rows(log);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  PlotFiles files{dir / "trajectory.csv", dir / "summary.csv", {}};
  write_trajectory_csv(log, files.trajectory_csv);
  write_summary_csv(log, files.summary_csv);
  if (plot) {
    files.chart_svg = dir / "capacity.svg";
    write_text_file(files.chart_svg, render_capacity_svg(log));
  }
  return files;
}

}  // namespace capmfg

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "capmfg/error.hpp"
#include "capmfg/export.hpp"
#include "fixtures.hpp"

namespace capmfg {
namespace {

TrajectoryLog small_log() {
  SimConfig cfg;
  cfg.agents = 4;
  cfg.steps = 3;
  cfg.demand_mean = testing::six_node_demand();
  cfg.demand_std = Vector::Zero(6);
  cfg.topology.kind = TopologyKind::Ring;
  return run_simulation(testing::six_node_network(), testing::six_node_costs(), cfg).log;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Export, CsvSchemas) {
  const auto log = small_log();
  const auto dir = std::filesystem::temp_directory_path() / "capmfg_export_test";
  std::filesystem::remove_all(dir);
  const auto files = emit_plots(log, dir, true);
  const auto traj = slurp(files.trajectory_csv);
  EXPECT_EQ(traj.substr(0, traj.find('\n')), "step,time,agent,edge,c_value");
  EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 1 + 4 * 4 * 9);
  const auto summary = slurp(files.summary_csv);
  EXPECT_EQ(summary.substr(0, summary.find('\n')), "step,time,spread_max,spread_mean");
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 1 + 4);
  EXPECT_TRUE(std::filesystem::exists(files.chart_svg));
  std::filesystem::remove_all(dir);
}

TEST(Export, ChartIsDeterministicAndSubsampled) {
  const auto log = small_log();
  const auto a = render_capacity_svg(log);
  EXPECT_EQ(a, render_capacity_svg(log));
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  auto count = [](const std::string& s) {
    std::size_t n = 0;
    for (auto pos = s.find("<polyline"); pos != std::string::npos; pos = s.find("<polyline", pos + 1)) ++n;
    return n;
  };
  EXPECT_EQ(count(a), 4u * 9u);
  EXPECT_EQ(count(render_capacity_svg(log, 2)), 2u * 9u);
}

TEST(Export, EmptyLogIsRejected) {
  TrajectoryLog empty;
  EXPECT_THROW(render_capacity_svg(empty), Error);
}

TEST(Export, UnwritableDirectoryIsAnIoError) {
  const auto log = small_log();
  const auto blocker = std::filesystem::temp_directory_path() / "capmfg_export_blocker";
  { std::ofstream(blocker) << "x"; }
  try {
    emit_plots(log, blocker / "sub", false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
  std::filesystem::remove(blocker);
}

}  // namespace
}  // namespace capmfg

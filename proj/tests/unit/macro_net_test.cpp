#include <algorithm>
#include <filesystem>

#include <gtest/gtest.h>

#include "capmfg/error.hpp"
#include "capmfg/macro_net.hpp"

namespace capmfg {
namespace {

TEST(ScaleFree, EdgeCountAndConnectivity) {
  for (std::size_t attach : {1u, 2u, 3u}) {
    const auto topo = generate_scale_free(300, attach, 42);
    EXPECT_EQ(topo.size(), 300u);
    EXPECT_EQ(topo.edge_count(), attach * (attach + 1) / 2 + (300 - attach - 1) * attach);
    EXPECT_TRUE(is_connected(topo));
    for (std::size_t k = 0; k < topo.size(); ++k) EXPECT_GE(topo.degree(k), attach);
  }
}

TEST(ScaleFree, SeedDeterminesGraph) {
  const auto a = generate_scale_free(200, 2, 9);
  const auto b = generate_scale_free(200, 2, 9);
  const auto c = generate_scale_free(200, 2, 10);
  EXPECT_EQ(a.edges(), b.edges());
  EXPECT_NE(a.edges(), c.edges());
}

TEST(ScaleFree, HasHubs) {
  const auto topo = generate_scale_free(1000, 2, 1);
  std::size_t max_deg = 0;
  for (std::size_t k = 0; k < topo.size(); ++k) max_deg = std::max(max_deg, topo.degree(k));
  const double mean_deg = 2.0 * static_cast<double>(topo.edge_count()) / 1000.0;
  EXPECT_GT(static_cast<double>(max_deg), 8.0 * mean_deg);
}

TEST(ScaleFree, RejectsBadParameters) {
  EXPECT_THROW(generate_scale_free(2, 2, 1), Error);
  EXPECT_THROW(generate_scale_free(10, 0, 1), Error);
}

TEST(Topology, FixedShapes) {
  const auto ring = make_ring(6);
  EXPECT_EQ(ring.edge_count(), 6u);
  EXPECT_TRUE(ring.adjacent(0, 5));
  EXPECT_FALSE(ring.adjacent(0, 2));
  const auto full = make_complete(5);
  EXPECT_EQ(full.edge_count(), 10u);
  const auto star = make_star(5);
  EXPECT_EQ(star.degree(0), 4u);
  EXPECT_EQ(star.degree(3), 1u);
}

TEST(Topology, Validation) {
  EXPECT_THROW(MacroTopology::from_edges(3, {{0, 0}, {1, 2}}), Error);  // self-loop
  EXPECT_THROW(MacroTopology::from_edges(4, {{0, 1}, {2, 3}}), Error);  // disconnected
  EXPECT_THROW(MacroTopology::from_edges(3, {{0, 1}}), Error);          // isolated node
  EXPECT_THROW(MacroTopology::from_edges(1, {}), Error);
  const auto t = MacroTopology::from_edges(3, {{0, 1}, {1, 0}, {1, 2}});  // duplicate collapses
  EXPECT_EQ(t.edge_count(), 2u);
}

TEST(Aggregation, RowStochasticNeighborAverage) {
  const auto topo = generate_scale_free(50, 2, 3);
  const Matrix P = topo.aggregation_matrix();
  EXPECT_LT((P.rowwise().sum() - Vector::Ones(50)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(P.diagonal().cwiseAbs().maxCoeff(), 0.0);
  const Matrix lap = laplacian_check(topo);
  EXPECT_LT((lap * Vector::Ones(50)).cwiseAbs().maxCoeff(), 1e-14);

  Matrix means(2, 50);
  for (Index k = 0; k < 50; ++k) means.col(k) << static_cast<double>(k), 1.0;
  const Matrix rho = aggregate_rho(topo, means);
  EXPECT_LT((rho.transpose() - P * means.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((rho.row(1).array() - 1.0).abs().maxCoeff(), 1e-15);
}

TEST(EdgeList, RoundTrip) {
  const auto topo = generate_scale_free(40, 2, 5);
  const auto path = std::filesystem::temp_directory_path() / "capmfg_edges_test.txt";
  write_edge_list(topo, path);
  const auto back = read_edge_list(path);
  EXPECT_EQ(back.edges(), topo.edges());
  std::filesystem::remove(path);
  EXPECT_THROW(read_edge_list(path), Error);
}

}  // namespace
}  // namespace capmfg

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "capmfg/numerics.hpp"

namespace capmfg {

/// Undirected communication graph between agents. Neighbor lists are sorted
/// and exclude the agent itself.
class MacroTopology {
 public:
  /// Validates symmetry, absence of self-loops, minimum degree one and connectivity.
  static MacroTopology from_edges(std::size_t p, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::size_t size() const { return neighbors_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t k) const { return neighbors_[k]; }
  std::size_t degree(std::size_t k) const { return neighbors_[k].size(); }
  bool adjacent(std::size_t i, std::size_t j) const;
  std::size_t edge_count() const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;  // i < j, lexicographic

  Matrix adjacency_matrix() const;
  /// Row-stochastic averaging operator P[k, j] = 1/|N(k)| for j in N(k).
  Matrix aggregation_matrix() const;

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
};

bool is_connected(const MacroTopology& topo);

/// Barabasi-Albert preferential attachment: a clique on attach+1 nodes, then
/// each new node links to `attach` distinct existing nodes with probability
/// proportional to their degree.
MacroTopology generate_scale_free(std::size_t p, std::size_t attach, std::uint64_t seed);

MacroTopology make_ring(std::size_t p);
MacroTopology make_complete(std::size_t p);
MacroTopology make_star(std::size_t p);  // node 0 is the hub

/// rho_k = mean of the neighbor columns of `means` (one column per agent).
Matrix aggregate_rho(const MacroTopology& topo, const Matrix& means);

/// I - P.
Matrix laplacian_check(const MacroTopology& topo);

/// One "i j" pair per line, zero-based, i < j.
void write_edge_list(const MacroTopology& topo, const std::filesystem::path& path);
MacroTopology read_edge_list(const std::filesystem::path& path, std::size_t p = 0);

}  // namespace capmfg

#include <algorithm>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <string>

#include "capmfg/error.hpp"
#include "capmfg/macro_net.hpp"

namespace capmfg {

MacroTopology MacroTopology::from_edges(
    std::size_t p, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  if (p < 2) throw Error(ErrorKind::InvalidParams, "topology needs at least two agents");
  MacroTopology topo;
  topo.neighbors_.assign(p, {});
  for (auto [i, j] : edges) {
    if (i >= p || j >= p) {
      throw Error(ErrorKind::InvalidParams,
                  "edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
    }
    if (i == j) throw Error(ErrorKind::InvalidParams, "self-loop at " + std::to_string(i));
    topo.neighbors_[i].push_back(j);
    topo.neighbors_[j].push_back(i);
  }
  for (std::size_t k = 0; k < p; ++k) {
    auto& nb = topo.neighbors_[k];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    if (nb.empty()) {
      throw Error(ErrorKind::InvalidParams, "agent " + std::to_string(k) + " has no neighbors");
    }
  }
  if (!is_connected(topo)) throw Error(ErrorKind::InvalidParams, "topology is not connected");
  return topo;
}

bool MacroTopology::adjacent(std::size_t i, std::size_t j) const {
  const auto& nb = neighbors_[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::size_t MacroTopology::edge_count() const {
  std::size_t twice = 0;
  for (const auto& nb : neighbors_) twice += nb.size();
  return twice / 2;
}

std::vector<std::pair<std::size_t, std::size_t>> MacroTopology::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < neighbors_.size(); ++i) {
    for (std::size_t j : neighbors_[i]) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

Matrix MacroTopology::adjacency_matrix() const {
  const auto p = static_cast<Index>(size());
  Matrix a = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j : neighbors_[i]) a(static_cast<Index>(i), static_cast<Index>(j)) = 1.0;
  }
  return a;
}

Matrix MacroTopology::aggregation_matrix() const {
  Matrix a = adjacency_matrix();
  for (Index i = 0; i < a.rows(); ++i) a.row(i) /= static_cast<double>(degree(static_cast<std::size_t>(i)));
  return a;
}

bool is_connected(const MacroTopology& topo) {
  const std::size_t p = topo.size();
  if (p == 0) return false;
  std::vector<bool> seen(p, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t k = frontier.front();
    frontier.pop();
    for (std::size_t j : topo.neighbors(k)) {
      if (!seen[j]) {
        seen[j] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == p;
}

MacroTopology generate_scale_free(std::size_t p, std::size_t attach, std::uint64_t seed) {
  if (attach < 1 || p < attach + 1) {
    throw Error(ErrorKind::InvalidParams, "scale-free generator needs p >= attach + 1 >= 2");
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  // Every edge endpoint appears once here, so uniform sampling from it is
  // sampling proportional to degree.
  std::vector<std::size_t> endpoints;
  const std::size_t core = attach + 1;
  for (std::size_t i = 0; i < core; ++i) {
    for (std::size_t j = i + 1; j < core; ++j) {
      edges.emplace_back(i, j);
      endpoints.push_back(i);
      endpoints.push_back(j);
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> targets;
  for (std::size_t node = core; node < p; ++node) {
    targets.clear();
    std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
    while (targets.size() < attach) {
      const std::size_t t = endpoints[pick(rng)];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (std::size_t t : targets) {
      edges.emplace_back(t, node);
      endpoints.push_back(t);
      endpoints.push_back(node);
    }
  }
  return MacroTopology::from_edges(p, edges);
}

MacroTopology make_ring(std::size_t p) {
  if (p < 2) throw Error(ErrorKind::InvalidParams, "ring needs p >= 2");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < p; ++i) edges.emplace_back(i, (i + 1) % p);
  return MacroTopology::from_edges(p, edges);
}

MacroTopology make_complete(std::size_t p) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) edges.emplace_back(i, j);
  }
  return MacroTopology::from_edges(p, edges);
}

MacroTopology make_star(std::size_t p) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t j = 1; j < p; ++j) edges.emplace_back(0, j);
  return MacroTopology::from_edges(p, edges);
}

Matrix aggregate_rho(const MacroTopology& topo, const Matrix& means) {
  if (static_cast<std::size_t>(means.cols()) != topo.size()) {
    throw Error(ErrorKind::DimensionMismatch, "one mean column per agent is required");
  }
  Matrix rho = Matrix::Zero(means.rows(), means.cols());
  for (std::size_t k = 0; k < topo.size(); ++k) {
    auto col = rho.col(static_cast<Index>(k));
    for (std::size_t j : topo.neighbors(k)) col += means.col(static_cast<Index>(j));
    col /= static_cast<double>(topo.degree(k));
  }
  return rho;
}

Matrix laplacian_check(const MacroTopology& topo) {
  const auto p = static_cast<Index>(topo.size());
  Matrix lap = Matrix::Identity(p, p);
  for (std::size_t k = 0; k < topo.size(); ++k) {
    const double w = 1.0 / static_cast<double>(topo.degree(k));
    for (std::size_t j : topo.neighbors(k)) lap(static_cast<Index>(k), static_cast<Index>(j)) -= w;
  }
  return lap;
}

void write_edge_list(const MacroTopology& topo, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  for (auto [i, j] : topo.edges()) out << i << ' ' << j << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

MacroTopology read_edge_list(const std::filesystem::path& path, std::size_t p) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_node = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ss(line);
    long long i = -1;
    long long j = -1;
    if (!(ss >> i >> j) || i < 0 || j < 0) {
      throw Error(ErrorKind::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": expected \"i j\"");
    }
    edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    max_node = std::max({max_node, static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
  }
  if (p == 0) p = max_node + 1;
  return MacroTopology::from_edges(p, edges);
}

}  // namespace capmfg
